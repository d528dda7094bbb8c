//! Finite forest algebras.
//!
//! A forest algebra is a pair `(H, V)`: a commutative monoid `H` (written
//! additively), a monoid `V` acting faithfully on `H` from the right, and an
//! insertion `ins(v, h)` with `g·ins(v, h) = g·v + h` for every `g`.
//!
//! The [`ForestAlgebra`] trait abstracts the operations so that lookup-table
//! algebras ([`FiniteForestAlgebra`]), subset algebras and lazily evaluated
//! wreath products can all be fed to the same division and covering checks.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terms::{Alphabet, Context, Forest, Label, TermError};

pub trait ForestAlgebra {
    type H: Clone + Eq + Ord + Hash + Debug;
    type V: Clone + Eq + Ord + Hash + Debug;

    fn zero(&self) -> Self::H;
    fn one(&self) -> Self::V;
    fn add(&self, a: &Self::H, b: &Self::H) -> Self::H;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn act(&self, h: &Self::H, v: &Self::V) -> Self::H;
    fn ins(&self, v: &Self::V, h: &Self::H) -> Self::V;
}

/// A law violation found while validating tables, with the offending indices.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum Violation {
    #[error("table shape: {0}")]
    Shape(String),
    #[error("{table} contains out-of-range value {value}")]
    OutOfRange { table: &'static str, value: usize },
    #[error("H is not associative at ({a},{b},{c})")]
    HNotAssociative { a: usize, b: usize, c: usize },
    #[error("H is not commutative at ({a},{b})")]
    HNotCommutative { a: usize, b: usize },
    #[error("zero is not neutral for {a}")]
    HZero { a: usize },
    #[error("V is not associative at ({a},{b},{c})")]
    VNotAssociative { a: usize, b: usize, c: usize },
    #[error("one is not neutral for {a}")]
    VOne { a: usize },
    #[error("action does not respect composition at h={h}, v1={v1}, v2={v2}")]
    ActionComposition { h: usize, v1: usize, v2: usize },
    #[error("one does not fix h={h}")]
    ActionUnit { h: usize },
    #[error("action is not faithful: {v1} and {v2} act identically")]
    Unfaithful { v1: usize, v2: usize },
    #[error("no element realizes ins({v},{h})")]
    MissingIns { v: usize, h: usize },
    #[error("ins({v},{h}) fails on g={g}")]
    InsMismatch { v: usize, h: usize, g: usize },
}

/// A failed check on a division, tm-division or covering witness.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{clause}: {detail}")]
pub struct WitnessError {
    pub clause: String,
    pub detail: String,
}

impl WitnessError {
    pub fn new(clause: impl Into<String>, detail: impl Into<String>) -> Self {
        WitnessError {
            clause: clause.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid algebra: {0}")]
    Invalid(#[from] Violation),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("letter `{0}` has no image")]
    MissingLetter(String),
    #[error("horizontal monoid is not commutative at ({0},{1})")]
    NonCommutative(usize, usize),
    #[error("size budget exceeded: needs {required}, budget {budget}")]
    Budget { required: usize, budget: usize },
    #[error("search cap exceeded: {0}")]
    Cap(String),
    #[error("witness rejected: {0}")]
    Witness(#[from] WitnessError),
    #[error("accepting state {0} out of range")]
    AcceptRange(usize),
}

/// Tables as they appear in algebra files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAlgebra {
    pub h: RawHorizontal,
    pub v: RawVertical,
    pub act: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ins: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHorizontal {
    pub size: usize,
    pub add: Vec<Vec<usize>>,
    pub zero: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawVertical {
    pub size: usize,
    pub mul: Vec<Vec<usize>>,
    pub one: usize,
}

/// A validated forest algebra given by lookup tables over `0..h_size` and
/// `0..v_size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteForestAlgebra {
    h_size: usize,
    v_size: usize,
    zero: usize,
    one: usize,
    add: Vec<usize>,
    mul: Vec<usize>,
    act: Vec<usize>,
    ins: Vec<usize>,
}

impl ForestAlgebra for FiniteForestAlgebra {
    type H = usize;
    type V = usize;

    fn zero(&self) -> usize {
        self.zero
    }
    fn one(&self) -> usize {
        self.one
    }
    fn add(&self, a: &usize, b: &usize) -> usize {
        self.add[a * self.h_size + b]
    }
    fn mul(&self, a: &usize, b: &usize) -> usize {
        self.mul[a * self.v_size + b]
    }
    fn act(&self, h: &usize, v: &usize) -> usize {
        self.act[h * self.v_size + v]
    }
    fn ins(&self, v: &usize, h: &usize) -> usize {
        self.ins[v * self.h_size + h]
    }
}

fn square(rows: &[Vec<usize>], n: usize, m: usize, name: &str) -> Result<Vec<usize>, Violation> {
    if rows.len() != n || rows.iter().any(|r| r.len() != m) {
        return Err(Violation::Shape(format!("{name} must be {n}x{m}")));
    }
    Ok(rows.iter().flatten().copied().collect())
}

fn in_range(table: &[usize], bound: usize, name: &'static str) -> Result<(), Violation> {
    match table.iter().find(|&&x| x >= bound) {
        Some(&value) => Err(Violation::OutOfRange { table: name, value }),
        None => Ok(()),
    }
}

/// Checks every forest algebra law on the raw tables and derives the
/// insertion table when it is absent. Returns the first violation found.
pub fn validate_algebra(raw: &RawAlgebra) -> Result<FiniteForestAlgebra, Violation> {
    validate_impl(raw, true)
}

/// Above this many law instances, tables produced by trusted constructions
/// are only checked structurally (shape, range, faithfulness, insertion).
const LAW_SCAN_LIMIT: usize = 20_000_000;

/// Validation for tables built from an algebra that is already known to be
/// valid (quotients, subalgebras, transformation monoids). The cubic law
/// scans run only when they are cheap.
pub(crate) fn assemble(raw: &RawAlgebra) -> Result<FiniteForestAlgebra, Violation> {
    let (n, m) = (raw.h.size, raw.v.size);
    let work = n.saturating_pow(3) + m.saturating_pow(3) + n.saturating_mul(m).saturating_mul(m);
    validate_impl(raw, work <= LAW_SCAN_LIMIT)
}

fn validate_impl(raw: &RawAlgebra, laws: bool) -> Result<FiniteForestAlgebra, Violation> {
    let (n, m) = (raw.h.size, raw.v.size);
    if n == 0 || m == 0 {
        return Err(Violation::Shape("H and V must be nonempty".into()));
    }
    let add = square(&raw.h.add, n, n, "h.add")?;
    let mul = square(&raw.v.mul, m, m, "v.mul")?;
    let act = square(&raw.act, n, m, "act")?;
    in_range(&add, n, "h.add")?;
    in_range(&mul, m, "v.mul")?;
    in_range(&act, n, "act")?;
    if raw.h.zero >= n {
        return Err(Violation::OutOfRange {
            table: "h.zero",
            value: raw.h.zero,
        });
    }
    if raw.v.one >= m {
        return Err(Violation::OutOfRange {
            table: "v.one",
            value: raw.v.one,
        });
    }
    let given_ins = match &raw.ins {
        Some(rows) => {
            let t = square(rows, m, n, "ins")?;
            in_range(&t, m, "ins")?;
            Some(t)
        }
        None => None,
    };
    let (zero, one) = (raw.h.zero, raw.v.one);
    let a = |x: usize, y: usize| add[x * n + y];
    let p = |x: usize, y: usize| mul[x * m + y];
    let ac = |h: usize, v: usize| act[h * m + v];

    for x in 0..n {
        if !laws {
            break;
        }
        if a(zero, x) != x || a(x, zero) != x {
            return Err(Violation::HZero { a: x });
        }
        for y in 0..n {
            if a(x, y) != a(y, x) {
                return Err(Violation::HNotCommutative { a: x, b: y });
            }
            for z in 0..n {
                if a(a(x, y), z) != a(x, a(y, z)) {
                    return Err(Violation::HNotAssociative { a: x, b: y, c: z });
                }
            }
        }
    }
    for x in 0..m {
        if !laws {
            break;
        }
        if p(one, x) != x || p(x, one) != x {
            return Err(Violation::VOne { a: x });
        }
        for y in 0..m {
            for z in 0..m {
                if p(p(x, y), z) != p(x, p(y, z)) {
                    return Err(Violation::VNotAssociative { a: x, b: y, c: z });
                }
            }
        }
    }
    for h in 0..n {
        if !laws {
            break;
        }
        if ac(h, one) != h {
            return Err(Violation::ActionUnit { h });
        }
        for v1 in 0..m {
            for v2 in 0..m {
                if ac(ac(h, v1), v2) != ac(h, p(v1, v2)) {
                    return Err(Violation::ActionComposition { h, v1, v2 });
                }
            }
        }
    }
    // faithfulness: columns of the action table must be pairwise distinct
    let mut by_column: HashMap<Vec<usize>, usize> = HashMap::new();
    for v in 0..m {
        let col: Vec<usize> = (0..n).map(|h| ac(h, v)).collect();
        if let Some(&prev) = by_column.get(&col) {
            return Err(Violation::Unfaithful { v1: prev, v2: v });
        }
        by_column.insert(col, v);
    }
    let mut ins = vec![0; m * n];
    for v in 0..m {
        for h in 0..n {
            let want: Vec<usize> = (0..n).map(|g| a(ac(g, v), h)).collect();
            match &given_ins {
                Some(t) => {
                    let w = t[v * n + h];
                    if let Some(g) = (0..n).find(|&g| ac(g, w) != want[g]) {
                        return Err(Violation::InsMismatch { v, h, g });
                    }
                    ins[v * n + h] = w;
                }
                None => match by_column.get(&want) {
                    Some(&w) => ins[v * n + h] = w,
                    None => return Err(Violation::MissingIns { v, h }),
                },
            }
        }
    }
    Ok(FiniteForestAlgebra {
        h_size: n,
        v_size: m,
        zero,
        one,
        add,
        mul,
        act,
        ins,
    })
}

impl FiniteForestAlgebra {
    pub fn h_size(&self) -> usize {
        self.h_size
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    pub fn to_raw(&self) -> RawAlgebra {
        let rows = |t: &[usize], n: usize, m: usize| -> Vec<Vec<usize>> {
            (0..n).map(|i| t[i * m..(i + 1) * m].to_vec()).collect()
        };
        RawAlgebra {
            h: RawHorizontal {
                size: self.h_size,
                add: rows(&self.add, self.h_size, self.h_size),
                zero: self.zero,
            },
            v: RawVertical {
                size: self.v_size,
                mul: rows(&self.mul, self.v_size, self.v_size),
                one: self.one,
            },
            act: rows(&self.act, self.h_size, self.v_size),
            ins: Some(rows(&self.ins, self.v_size, self.h_size)),
        }
    }

    /// Builds and validates an algebra from closures over index ranges.
    pub fn from_fns(
        h_size: usize,
        v_size: usize,
        zero: usize,
        one: usize,
        add: impl Fn(usize, usize) -> usize,
        mul: impl Fn(usize, usize) -> usize,
        act: impl Fn(usize, usize) -> usize,
    ) -> Result<FiniteForestAlgebra, Violation> {
        validate_algebra(&raw_from_fns(h_size, v_size, zero, one, add, mul, act))
    }

    pub(crate) fn from_fns_trusted(
        h_size: usize,
        v_size: usize,
        zero: usize,
        one: usize,
        add: impl Fn(usize, usize) -> usize,
        mul: impl Fn(usize, usize) -> usize,
        act: impl Fn(usize, usize) -> usize,
    ) -> Result<FiniteForestAlgebra, Violation> {
        assemble(&raw_from_fns(h_size, v_size, zero, one, add, mul, act))
    }

    /// The one-element algebra.
    pub fn trivial() -> FiniteForestAlgebra {
        FiniteForestAlgebra::from_fns(1, 1, 0, 0, |_, _| 0, |_, _| 0, |_, _| 0)
            .expect("one-element tables satisfy every law")
    }

    /// The flat algebra `(H, H)` of a commutative monoid acting on itself by
    /// addition. Returns the algebra and whether `H` is idempotent.
    pub fn flat(add: &[Vec<usize>], zero: usize) -> Result<(FiniteForestAlgebra, bool), AlgebraError> {
        let n = add.len();
        let table = square(add, n, n, "monoid")?;
        in_range(&table, n, "monoid")?;
        for x in 0..n {
            for y in 0..n {
                if table[x * n + y] != table[y * n + x] {
                    return Err(AlgebraError::NonCommutative(x, y));
                }
            }
        }
        let alg = FiniteForestAlgebra::from_fns(
            n,
            n,
            zero,
            zero,
            |x, y| table[x * n + y],
            |x, y| table[x * n + y],
            |x, y| table[x * n + y],
        )?;
        let idempotent = alg.is_h_idempotent();
        Ok((alg, idempotent))
    }

    pub fn is_h_idempotent(&self) -> bool {
        (0..self.h_size).all(|h| self.add(&h, &h) == h)
    }

    /// First `h` with `h + h != h`.
    pub fn non_idempotent_element(&self) -> Option<usize> {
        (0..self.h_size).find(|h| self.add(h, h) != *h)
    }

    pub fn action_column(&self, v: usize) -> Vec<usize> {
        (0..self.h_size).map(|h| self.act(&h, &v)).collect()
    }
}


fn raw_from_fns(
    h_size: usize,
    v_size: usize,
    zero: usize,
    one: usize,
    add: impl Fn(usize, usize) -> usize,
    mul: impl Fn(usize, usize) -> usize,
    act: impl Fn(usize, usize) -> usize,
) -> RawAlgebra {
    RawAlgebra {
        h: RawHorizontal {
            size: h_size,
            add: (0..h_size)
                .map(|x| (0..h_size).map(|y| add(x, y)).collect())
                .collect(),
            zero,
        },
        v: RawVertical {
            size: v_size,
            mul: (0..v_size)
                .map(|x| (0..v_size).map(|y| mul(x, y)).collect())
                .collect(),
            one,
        },
        act: (0..h_size)
            .map(|h| (0..v_size).map(|v| act(h, v)).collect())
            .collect(),
        ins: None,
    }
}

/// First step in the derivation of a vertical element of a transition
/// algebra: right multiplication by a letter map or by `x ↦ x + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VStep {
    Letter(usize),
    Plus(usize),
}

/// The forest algebra of a deterministic bottom-up forest automaton.
#[derive(Debug, Clone)]
pub struct TransitionAlgebra {
    pub algebra: FiniteForestAlgebra,
    /// Vertical element of each letter map, in input order.
    pub letters: Vec<usize>,
    /// The transformation of `H` performed by each vertical element.
    pub tables: Vec<Vec<usize>>,
    /// `(parent, step)` with `element = parent · step`; `None` for one.
    pub parent: Vec<Option<(usize, VStep)>>,
}

/// Builds `(H, V)` where `H = 0..n` with the given commutative addition and
/// `V` is the transformation monoid generated by `letter_maps` and the maps
/// `x ↦ x + h`. Fails once `V` grows beyond `budget` elements.
pub fn transition_algebra(
    add: &[usize],
    n: usize,
    zero: usize,
    letter_maps: &[Vec<usize>],
    budget: usize,
) -> Result<TransitionAlgebra, AlgebraError> {
    let mut gens: Vec<(Vec<usize>, VStep)> = letter_maps
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), VStep::Letter(i)))
        .collect();
    gens.extend((0..n).map(|h| ((0..n).map(|x| add[x * n + h]).collect(), VStep::Plus(h))));
    let mut tables: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    index.insert(tables[0].clone(), 0);
    let mut parent = vec![None];
    // right Cayley graph: right[v][g] = v · g
    let mut right: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < tables.len() {
        let mut row = Vec::with_capacity(gens.len());
        for (g, step) in &gens {
            let w: Vec<usize> = tables[i].iter().map(|&x| g[x]).collect();
            let j = match index.get(&w) {
                Some(&j) => j,
                None => {
                    if tables.len() >= budget {
                        return Err(AlgebraError::Budget {
                            required: tables.len() + 1,
                            budget,
                        });
                    }
                    index.insert(w.clone(), tables.len());
                    tables.push(w);
                    parent.push(Some((i, *step)));
                    tables.len() - 1
                }
            };
            row.push(j);
        }
        right.push(row);
        i += 1;
    }
    let m = tables.len();
    let gen_of = |step: VStep| match step {
        VStep::Letter(i) => i,
        VStep::Plus(h) => letter_maps.len() + h,
    };
    // mul[x][y] = mul[x][parent(y)] · step(y), filled in discovery order of y
    let mut mul = vec![0usize; m * m];
    for y in 0..m {
        for x in 0..m {
            mul[x * m + y] = match parent[y] {
                None => x,
                Some((p, step)) => right[mul[x * m + p]][gen_of(step)],
            };
        }
    }
    let letters = (0..letter_maps.len()).map(|i| right[0][i]).collect();
    let algebra = FiniteForestAlgebra::from_fns_trusted(
        n,
        m,
        zero,
        0,
        |x, y| add[x * n + y],
        |x, y| mul[x * m + y],
        |h, v| tables[v][h],
    )?;
    Ok(TransitionAlgebra {
        algebra,
        letters,
        tables,
        parent,
    })
}

/// A homomorphism from the free forest algebra, given by letter images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    algebra: FiniteForestAlgebra,
    alphabet: Alphabet,
    letters: Vec<usize>,
}

impl Morphism {
    pub fn new(
        algebra: FiniteForestAlgebra,
        alphabet: Alphabet,
        letters: &BTreeMap<Label, usize>,
    ) -> Result<Morphism, AlgebraError> {
        let mut imgs = Vec::with_capacity(alphabet.len());
        for l in alphabet.labels() {
            let v = *letters
                .get(l)
                .ok_or_else(|| AlgebraError::MissingLetter(l.to_string()))?;
            if v >= algebra.v_size() {
                return Err(Violation::OutOfRange {
                    table: "letters",
                    value: v,
                }
                .into());
            }
            imgs.push(v);
        }
        Ok(Morphism {
            algebra,
            alphabet,
            letters: imgs,
        })
    }

    pub fn algebra(&self) -> &FiniteForestAlgebra {
        &self.algebra
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn letter(&self, label: &Label) -> Result<usize, AlgebraError> {
        self.alphabet
            .index_of(label)
            .map(|i| self.letters[i])
            .ok_or_else(|| {
                TermError::UnknownLabel {
                    label: label.to_string(),
                    pos: 0,
                }
                .into()
            })
    }

    /// Letter images in alphabet order.
    pub fn letter_images(&self) -> &[usize] {
        &self.letters
    }

    pub fn letter_map(&self) -> BTreeMap<Label, usize> {
        self.alphabet
            .labels()
            .iter()
            .cloned()
            .zip(self.letters.iter().copied())
            .collect()
    }

    pub fn eval_forest(&self, s: &Forest) -> Result<usize, AlgebraError> {
        let alg = &self.algebra;
        let mut acc = alg.zero();
        for t in s.trees() {
            let inner = self.eval_forest(t.children())?;
            let v = self.letter(t.label())?;
            acc = alg.add(&acc, &alg.act(&inner, &v));
        }
        Ok(acc)
    }

    pub fn eval_context(&self, p: &Context) -> Result<usize, AlgebraError> {
        let alg = &self.algebra;
        let mut v = alg.ins(&alg.one(), &self.eval_forest(p.hole_siblings())?);
        for fr in p.frames() {
            v = alg.mul(&v, &self.letter(&fr.label)?);
            v = alg.ins(&v, &self.eval_forest(&fr.siblings)?);
        }
        Ok(v)
    }

    /// The image of the free algebra, with a shortest realizing term for
    /// every reachable element.
    pub fn image(&self) -> Image {
        let alg = &self.algebra;
        let mut img = Image::default();
        let mut h_seen: HashMap<usize, usize> = HashMap::new();
        let mut v_seen: HashMap<usize, usize> = HashMap::new();
        let mut queue: VecDeque<Item> = VecDeque::new();
        enum Item {
            H(usize),
            V(usize),
        }
        let push_h = |h: usize, t: Forest, img: &mut Image, seen: &mut HashMap<usize, usize>, q: &mut VecDeque<Item>| {
            if !seen.contains_key(&h) {
                seen.insert(h, img.h.len());
                img.h.push(h);
                img.h_terms.push(t);
                q.push_back(Item::H(h));
            }
        };
        let push_v = |v: usize, t: Context, img: &mut Image, seen: &mut HashMap<usize, usize>, q: &mut VecDeque<Item>| {
            if !seen.contains_key(&v) {
                seen.insert(v, img.v.len());
                img.v.push(v);
                img.v_terms.push(t);
                q.push_back(Item::V(v));
            }
        };
        push_h(alg.zero(), Forest::empty(), &mut img, &mut h_seen, &mut queue);
        push_v(alg.one(), Context::hole(), &mut img, &mut v_seen, &mut queue);
        // elements already popped, which new elements get combined with
        let mut done_h: Vec<usize> = Vec::new();
        let mut done_v: Vec<usize> = Vec::new();
        while let Some(item) = queue.pop_front() {
            match item {
                Item::H(h) => {
                    let ht = img.h_terms[h_seen[&h]].clone();
                    done_h.push(h);
                    for &g in &done_h.clone() {
                        let gt = &img.h_terms[h_seen[&g]];
                        let sum = alg.add(&h, &g);
                        let t = ht.add(gt);
                        push_h(sum, t, &mut img, &mut h_seen, &mut queue);
                    }
                    for (i, l) in self.alphabet.labels().iter().enumerate() {
                        let x = alg.act(&h, &self.letters[i]);
                        push_h(x, ht.adjoin(l.clone()), &mut img, &mut h_seen, &mut queue);
                    }
                    for &v in &done_v.clone() {
                        let vt = img.v_terms[v_seen[&v]].insert(&ht);
                        push_v(alg.ins(&v, &h), vt, &mut img, &mut v_seen, &mut queue);
                    }
                }
                Item::V(v) => {
                    let vt = img.v_terms[v_seen[&v]].clone();
                    done_v.push(v);
                    for (i, l) in self.alphabet.labels().iter().enumerate() {
                        let x = alg.mul(&v, &self.letters[i]);
                        let t = vt.compose(&Context::letter(l.clone()));
                        push_v(x, t, &mut img, &mut v_seen, &mut queue);
                    }
                    for &h in &done_h.clone() {
                        let t = vt.insert(&img.h_terms[h_seen[&h]]);
                        push_v(alg.ins(&v, &h), t, &mut img, &mut v_seen, &mut queue);
                    }
                }
            }
        }
        img
    }
}

/// Reachable elements of a morphism, in discovery order, with realizers.
#[derive(Debug, Clone, Default)]
pub struct Image {
    pub h: Vec<usize>,
    pub h_terms: Vec<Forest>,
    pub v: Vec<usize>,
    pub v_terms: Vec<Context>,
}

impl Image {
    pub fn h_term(&self, h: usize) -> Option<&Forest> {
        self.h.iter().position(|&x| x == h).map(|i| &self.h_terms[i])
    }

    pub fn v_term(&self, v: usize) -> Option<&Context> {
        self.v.iter().position(|&x| x == v).map(|i| &self.v_terms[i])
    }
}

/// A morphism together with an accepting set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognizer {
    morphism: Morphism,
    accept: BTreeSet<usize>,
}

impl Recognizer {
    pub fn new(morphism: Morphism, accept: BTreeSet<usize>) -> Result<Recognizer, AlgebraError> {
        if let Some(&x) = accept.iter().find(|&&x| x >= morphism.algebra.h_size()) {
            return Err(AlgebraError::AcceptRange(x));
        }
        Ok(Recognizer { morphism, accept })
    }

    pub fn morphism(&self) -> &Morphism {
        &self.morphism
    }

    pub fn algebra(&self) -> &FiniteForestAlgebra {
        &self.morphism.algebra
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.morphism.alphabet
    }

    pub fn accept_set(&self) -> &BTreeSet<usize> {
        &self.accept
    }

    pub fn accepts(&self, s: &Forest) -> Result<bool, AlgebraError> {
        Ok(self.accept.contains(&self.morphism.eval_forest(s)?))
    }

    pub fn to_raw(&self) -> RawRecognizer {
        RawRecognizer {
            algebra: self.algebra().to_raw(),
            alphabet: self
                .alphabet()
                .labels()
                .iter()
                .map(|l| l.to_string())
                .collect(),
            letters: self
                .morphism
                .letter_map()
                .into_iter()
                .map(|(l, v)| (l.to_string(), v))
                .collect(),
            accept: self.accept.iter().copied().collect(),
        }
    }

    pub fn from_raw(raw: &RawRecognizer) -> Result<Recognizer, AlgebraError> {
        let alg = validate_algebra(&raw.algebra)?;
        let alphabet = Alphabet::new(&raw.alphabet)?;
        let mut letters = BTreeMap::new();
        for (name, &v) in &raw.letters {
            let l = Label::new(name)?;
            if !alphabet.contains(&l) {
                return Err(TermError::NotInAlphabet(name.clone()).into());
            }
            letters.insert(l, v);
        }
        let m = Morphism::new(alg, alphabet, &letters)?;
        Recognizer::new(m, raw.accept.iter().copied().collect())
    }
}

/// Recognizer file layout: algebra tables plus alphabet, letter images and
/// accepting states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecognizer {
    #[serde(flatten)]
    pub algebra: RawAlgebra,
    pub alphabet: Vec<String>,
    pub letters: BTreeMap<String, usize>,
    pub accept: Vec<usize>,
}

/// Output of [`syntactic_algebra`].
#[derive(Debug, Clone)]
pub struct Syntactic {
    pub algebra: FiniteForestAlgebra,
    /// Class of each original horizontal element; `None` when unreachable.
    pub h_quot: Vec<Option<usize>>,
    pub v_quot: Vec<Option<usize>>,
    pub recognizer: Recognizer,
}

/// Minimizes a recognizer to the syntactic forest algebra of its language.
///
/// The reachable part is partitioned by acceptance and refined until the
/// partition is stable under the action of the vertical generators (letters
/// and `1 + h`). Vertical elements are then identified when they act the same
/// on horizontal classes. Classes are numbered in order of first discovery
/// from the empty forest, so the result does not depend on the numbering of
/// the input.
pub fn syntactic_algebra(r: &Recognizer) -> Syntactic {
    let alg = r.algebra();
    let img = r.morphism.image();
    let mut gens: Vec<usize> = r.morphism.letters.clone();
    gens.extend(img.h.iter().map(|h| alg.ins(&alg.one(), h)));
    gens.sort_unstable();
    gens.dedup();

    let pos: HashMap<usize, usize> = img.h.iter().enumerate().map(|(i, &h)| (h, i)).collect();
    let mut class: Vec<usize> = img
        .h
        .iter()
        .map(|h| usize::from(r.accept.contains(h)))
        .collect();
    let mut count = 0;
    loop {
        let mut sigs: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut next = Vec::with_capacity(class.len());
        for (i, h) in img.h.iter().enumerate() {
            let mut sig = vec![class[i]];
            sig.extend(gens.iter().map(|g| class[pos[&alg.act(h, g)]]));
            let n = sigs.len();
            next.push(*sigs.entry(sig).or_insert(n));
        }
        let new_count = sigs.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // horizontal classes are already numbered by first occurrence in
    // discovery order, because signatures are assigned in that order
    let h_count = count;
    let mut h_rep = vec![usize::MAX; h_count];
    for (i, &c) in class.iter().enumerate() {
        if h_rep[c] == usize::MAX {
            h_rep[c] = img.h[i];
        }
    }
    let h_class = |h: usize| class[pos[&h]];

    let mut v_classes: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut v_class_of: HashMap<usize, usize> = HashMap::new();
    let mut v_rep: Vec<usize> = Vec::new();
    for &v in &img.v {
        let sig: Vec<usize> = h_rep.iter().map(|h| h_class(alg.act(h, &v))).collect();
        let n = v_classes.len();
        let c = *v_classes.entry(sig).or_insert(n);
        if c == v_rep.len() {
            v_rep.push(v);
        }
        v_class_of.insert(v, c);
    }
    let v_count = v_rep.len();
    let quotient = FiniteForestAlgebra::from_fns_trusted(
        h_count,
        v_count,
        h_class(alg.zero()),
        v_class_of[&alg.one()],
        |x, y| h_class(alg.add(&h_rep[x], &h_rep[y])),
        |x, y| v_class_of[&alg.mul(&v_rep[x], &v_rep[y])],
        |h, v| h_class(alg.act(&h_rep[h], &v_rep[v])),
    )
    .expect("quotient of a valid algebra by a congruence is valid");

    let mut h_quot = vec![None; alg.h_size()];
    for (i, &h) in img.h.iter().enumerate() {
        h_quot[h] = Some(class[i]);
    }
    let mut v_quot = vec![None; alg.v_size()];
    for (&v, &c) in &v_class_of {
        v_quot[v] = Some(c);
    }
    let letters: BTreeMap<Label, usize> = r
        .morphism
        .letter_map()
        .into_iter()
        .map(|(l, v)| (l, v_class_of[&v]))
        .collect();
    let accept: BTreeSet<usize> = r
        .accept
        .iter()
        .filter_map(|&h| h_quot[h])
        .collect();
    let morphism = Morphism::new(quotient.clone(), r.alphabet().clone(), &letters)
        .expect("letters map into the quotient");
    let recognizer = Recognizer::new(morphism, accept).expect("accepting classes in range");
    Syntactic {
        algebra: quotient,
        h_quot,
        v_quot,
        recognizer,
    }
}

/// The flat algebra of all subsets of `0..universe` under union.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatSubsetAlgebra {
    pub universe: usize,
}

impl FlatSubsetAlgebra {
    pub fn new(universe: usize) -> Self {
        FlatSubsetAlgebra { universe }
    }

    pub fn singleton(&self, x: usize) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.universe);
        b.insert(x);
        b
    }

    pub fn set<I: IntoIterator<Item = usize>>(&self, items: I) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.universe);
        b.extend(items);
        b
    }

    fn union(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
        let mut c = a.clone();
        c.union_with(b);
        c
    }
}

impl ForestAlgebra for FlatSubsetAlgebra {
    type H = FixedBitSet;
    type V = FixedBitSet;

    fn zero(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.universe)
    }
    fn one(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.universe)
    }
    fn add(&self, a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
        Self::union(a, b)
    }
    fn mul(&self, a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
        Self::union(a, b)
    }
    fn act(&self, h: &FixedBitSet, v: &FixedBitSet) -> FixedBitSet {
        Self::union(h, v)
    }
    fn ins(&self, v: &FixedBitSet, h: &FixedBitSet) -> FixedBitSet {
        Self::union(v, h)
    }
}

/// Coordinates of the elements of a tabulated wreath product.
#[derive(Debug, Clone)]
pub struct WreathCoords {
    /// `(outer, inner)` horizontal pairs.
    pub h: Vec<(usize, usize)>,
    /// `(function from inner H to outer V, inner V)` vertical pairs.
    pub v: Vec<(Vec<usize>, usize)>,
}

impl WreathCoords {
    /// The right-coordinate projection as index maps.
    pub fn projection(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.h.iter().map(|&(_, h1)| h1).collect(),
            self.v.iter().map(|(_, v1)| *v1).collect(),
        )
    }
}

/// Wreath product `outer ∘ inner` evaluated on demand. Horizontal elements
/// are `(outer H, inner H)` pairs; vertical elements are a function from
/// inner `H` (as a vector) to outer `V`, paired with an inner `V`.
pub struct Wreath<'a, L: ForestAlgebra> {
    pub outer: &'a L,
    pub inner: &'a FiniteForestAlgebra,
}

impl<'a, L: ForestAlgebra> Wreath<'a, L> {
    pub fn new(outer: &'a L, inner: &'a FiniteForestAlgebra) -> Self {
        Wreath { outer, inner }
    }

    pub fn project(&self, v: &(Vec<L::V>, usize)) -> usize {
        v.1
    }
}

impl<'a, L: ForestAlgebra> ForestAlgebra for Wreath<'a, L> {
    type H = (L::H, usize);
    type V = (Vec<L::V>, usize);

    fn zero(&self) -> Self::H {
        (self.outer.zero(), self.inner.zero())
    }
    fn one(&self) -> Self::V {
        (vec![self.outer.one(); self.inner.h_size()], self.inner.one())
    }
    fn add(&self, a: &Self::H, b: &Self::H) -> Self::H {
        (self.outer.add(&a.0, &b.0), self.inner.add(&a.1, &b.1))
    }
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V {
        let g = (0..self.inner.h_size())
            .map(|h| self.outer.mul(&a.0[h], &b.0[self.inner.act(&h, &a.1)]))
            .collect();
        (g, self.inner.mul(&a.1, &b.1))
    }
    fn act(&self, h: &Self::H, v: &Self::V) -> Self::H {
        (self.outer.act(&h.0, &v.0[h.1]), self.inner.act(&h.1, &v.1))
    }
    fn ins(&self, v: &Self::V, h: &Self::H) -> Self::V {
        let f = v.0.iter().map(|x| self.outer.ins(x, &h.0)).collect();
        (f, self.inner.ins(&v.1, &h.1))
    }
}

/// Tabulates the full wreath product `outer ∘ inner`, refusing when
/// `|V_outer|^|H_inner| · |V_inner|` exceeds `budget`.
pub fn wreath(
    outer: &FiniteForestAlgebra,
    inner: &FiniteForestAlgebra,
    budget: usize,
) -> Result<(FiniteForestAlgebra, WreathCoords), AlgebraError> {
    let required = (outer.v_size() as u128)
        .checked_pow(inner.h_size() as u32)
        .and_then(|x| x.checked_mul(inner.v_size() as u128))
        .unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(AlgebraError::Budget {
            required: usize::try_from(required).unwrap_or(usize::MAX),
            budget,
        });
    }
    let w = Wreath::new(outer, inner);
    let h: Vec<(usize, usize)> = (0..outer.h_size())
        .flat_map(|h2| (0..inner.h_size()).map(move |h1| (h2, h1)))
        .collect();
    let mut v: Vec<(Vec<usize>, usize)> = Vec::new();
    let n1 = inner.h_size();
    let mut f = vec![0usize; n1];
    loop {
        for v1 in 0..inner.v_size() {
            v.push((f.clone(), v1));
        }
        // odometer over functions inner H -> outer V
        let mut i = 0;
        while i < n1 {
            f[i] += 1;
            if f[i] < outer.v_size() {
                break;
            }
            f[i] = 0;
            i += 1;
        }
        if i == n1 {
            break;
        }
    }
    let h_index: HashMap<(usize, usize), usize> = h.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
    let v_index: HashMap<(Vec<usize>, usize), usize> = v.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
    let one = v_index[&w.one()];
    let zero = h_index[&w.zero()];
    let alg = FiniteForestAlgebra::from_fns(
        h.len(),
        v.len(),
        zero,
        one,
        |x, y| h_index[&w.add(&h[x], &h[y])],
        |x, y| v_index[&w.mul(&v[x], &v[y])],
        |x, y| h_index[&w.act(&h[x], &v[y])],
    )?;
    let coords = WreathCoords { h, v };
    check_projection(&alg, inner, &coords)?;
    Ok((alg, coords))
}

fn check_projection(
    alg: &FiniteForestAlgebra,
    inner: &FiniteForestAlgebra,
    coords: &WreathCoords,
) -> Result<(), AlgebraError> {
    let (ph, pv) = coords.projection();
    for x in 0..alg.h_size() {
        for y in 0..alg.h_size() {
            if ph[alg.add(&x, &y)] != inner.add(&ph[x], &ph[y]) {
                return Err(WitnessError::new("projection", format!("add at ({x},{y})")).into());
            }
        }
        for v in 0..alg.v_size() {
            if ph[alg.act(&x, &v)] != inner.act(&ph[x], &pv[v]) {
                return Err(WitnessError::new("projection", format!("act at ({x},{v})")).into());
            }
        }
    }
    for x in 0..alg.v_size() {
        for y in 0..alg.v_size() {
            if pv[alg.mul(&x, &y)] != inner.mul(&pv[x], &pv[y]) {
                return Err(WitnessError::new("projection", format!("mul at ({x},{y})")).into());
            }
        }
    }
    Ok(())
}

/// The subalgebra of `alg` generated by the given elements, tabulated.
///
/// `h_elems` and `v_elems` list the generated elements of `alg`. Vertical
/// elements acting identically on the generated horizontal part are merged
/// in the tabulated `algebra` (`v_class` maps each listed element to its
/// class), since a subalgebra need not act faithfully.
#[derive(Debug, Clone)]
pub struct Subalgebra<H, V> {
    pub h_elems: Vec<H>,
    pub v_elems: Vec<V>,
    pub v_class: Vec<usize>,
    pub algebra: FiniteForestAlgebra,
}

impl<H, V> Subalgebra<H, V> {
    pub fn collapsed(&self) -> bool {
        self.algebra.v_size() != self.v_elems.len()
    }
}

pub fn generated_subalgebra<A: ForestAlgebra>(
    alg: &A,
    h_gens: &[A::H],
    v_gens: &[A::V],
    budget: usize,
) -> Result<Subalgebra<A::H, A::V>, AlgebraError> {
    let mut hs: Vec<A::H> = Vec::new();
    let mut h_idx: HashMap<A::H, usize> = HashMap::new();
    let mut vs: Vec<A::V> = Vec::new();
    let mut v_idx: HashMap<A::V, usize> = HashMap::new();
    // indices into `vs` of the vertical generators (including every 1 + h)
    let mut gens: Vec<usize> = Vec::new();
    let mut gen_set: BTreeSet<usize> = BTreeSet::new();

    fn intern<T: Clone + Eq + Hash>(x: T, list: &mut Vec<T>, idx: &mut HashMap<T, usize>) -> usize {
        if let Some(&i) = idx.get(&x) {
            return i;
        }
        idx.insert(x.clone(), list.len());
        list.push(x);
        list.len() - 1
    }

    intern(alg.zero(), &mut hs, &mut h_idx);
    for h in h_gens {
        intern(h.clone(), &mut hs, &mut h_idx);
    }
    intern(alg.one(), &mut vs, &mut v_idx);
    for v in v_gens {
        let i = intern(v.clone(), &mut vs, &mut v_idx);
        if gen_set.insert(i) {
            gens.push(i);
        }
    }
    let (mut h_done, mut v_done, mut g_done) = (0usize, 0usize, 0usize);
    while h_done < hs.len() || v_done < vs.len() || g_done < gens.len() {
        if hs.len() + vs.len() > budget {
            return Err(AlgebraError::Budget {
                required: hs.len() + vs.len(),
                budget,
            });
        }
        let (h_end, v_end) = (hs.len(), vs.len());
        // new horizontal elements: sums with everything before them, the
        // generator 1 + h, and the action of every known generator
        for i in h_done..h_end {
            for j in 0..=i {
                let s = alg.add(&hs[i], &hs[j]);
                intern(s, &mut hs, &mut h_idx);
            }
            let g = alg.ins(&alg.one(), &hs[i]);
            let gi = intern(g, &mut vs, &mut v_idx);
            if gen_set.insert(gi) {
                gens.push(gi);
            }
        }
        let g_end = gens.len();
        for i in h_done..h_end {
            for &g in &gens[..g_done] {
                let x = alg.act(&hs[i], &vs[g]);
                intern(x, &mut hs, &mut h_idx);
            }
        }
        for i in 0..h_end {
            for &g in &gens[g_done..g_end] {
                let x = alg.act(&hs[i], &vs[g]);
                intern(x, &mut hs, &mut h_idx);
            }
        }
        for i in v_done..v_end {
            for &g in &gens[..g_done] {
                let x = alg.mul(&vs[i], &vs[g]);
                intern(x, &mut vs, &mut v_idx);
            }
        }
        for i in 0..v_end {
            for &g in &gens[g_done..g_end] {
                let x = alg.mul(&vs[i], &vs[g]);
                intern(x, &mut vs, &mut v_idx);
            }
        }
        h_done = h_end;
        v_done = v_end;
        g_done = g_end;
    }
    if hs.len() + vs.len() > budget {
        return Err(AlgebraError::Budget {
            required: hs.len() + vs.len(),
            budget,
        });
    }
    tabulate(alg, hs, vs)
}

/// Tabulates a subset of `alg` that is already closed under every operation.
pub fn tabulate<A: ForestAlgebra>(
    alg: &A,
    hs: Vec<A::H>,
    vs: Vec<A::V>,
) -> Result<Subalgebra<A::H, A::V>, AlgebraError> {
    let h_idx: HashMap<&A::H, usize> = hs.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let v_idx: HashMap<&A::V, usize> = vs.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let missing = |what: &str| AlgebraError::Witness(WitnessError::new("closure", format!("{what} leaves the subset")));
    let act: Vec<Vec<usize>> = hs
        .iter()
        .map(|h| {
            vs.iter()
                .map(|v| h_idx.get(&alg.act(h, v)).copied().ok_or_else(|| missing("act")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut classes: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut v_class = Vec::with_capacity(vs.len());
    let mut reps: Vec<usize> = Vec::new();
    for j in 0..vs.len() {
        let col: Vec<usize> = (0..hs.len()).map(|i| act[i][j]).collect();
        let n = classes.len();
        let c = *classes.entry(col).or_insert(n);
        if c == reps.len() {
            reps.push(j);
        }
        v_class.push(c);
    }
    let mut add = vec![vec![0; hs.len()]; hs.len()];
    for i in 0..hs.len() {
        for j in 0..hs.len() {
            add[i][j] = *h_idx.get(&alg.add(&hs[i], &hs[j])).ok_or_else(|| missing("add"))?;
        }
    }
    let mut mul = vec![vec![0; reps.len()]; reps.len()];
    for (x, &i) in reps.iter().enumerate() {
        for (y, &j) in reps.iter().enumerate() {
            let p = alg.mul(&vs[i], &vs[j]);
            mul[x][y] = v_class[*v_idx.get(&p).ok_or_else(|| missing("mul"))?];
        }
    }
    let raw = RawAlgebra {
        h: RawHorizontal {
            size: hs.len(),
            add,
            zero: h_idx[&alg.zero()],
        },
        v: RawVertical {
            size: reps.len(),
            mul,
            one: v_class[*v_idx.get(&alg.one()).ok_or_else(|| missing("one"))?],
        },
        act: (0..hs.len())
            .map(|i| reps.iter().map(|&j| act[i][j]).collect())
            .collect(),
        ins: None,
    };
    let algebra = assemble(&raw)?;
    Ok(Subalgebra {
        h_elems: hs,
        v_elems: vs,
        v_class,
        algebra,
    })
}

/// `(H, V)` is a homomorphic image of the subalgebra of `B` listed here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionWitness<HB, VB> {
    pub h_elems: Vec<HB>,
    pub h_map: Vec<usize>,
    pub v_elems: Vec<VB>,
    pub v_map: Vec<usize>,
}

/// Transformation-monoid division: `Ψ : K → H` on a submonoid `K` of the
/// larger horizontal monoid, and a lift `hat(v)` of every vertical element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmDivisionWitness<HB, VB> {
    pub k: Vec<HB>,
    pub psi: Vec<usize>,
    pub hat: Vec<VB>,
}

fn index_of<T: Eq + Hash + Clone>(items: &[T]) -> Result<HashMap<T, usize>, WitnessError> {
    let mut m = HashMap::new();
    for (i, x) in items.iter().enumerate() {
        if m.insert(x.clone(), i).is_some() {
            return Err(WitnessError::new("distinct", format!("element {i} listed twice")));
        }
    }
    Ok(m)
}

/// Exhaustive table check of a division witness of `a` by `b`.
pub fn verify_division<B: ForestAlgebra>(
    a: &FiniteForestAlgebra,
    b: &B,
    w: &DivisionWitness<B::H, B::V>,
) -> Result<(), WitnessError> {
    if w.h_elems.len() != w.h_map.len() || w.v_elems.len() != w.v_map.len() {
        return Err(WitnessError::new("shape", "maps and element lists differ in length"));
    }
    if let Some(&x) = w.h_map.iter().find(|&&x| x >= a.h_size()) {
        return Err(WitnessError::new("range", format!("horizontal image {x}")));
    }
    if let Some(&x) = w.v_map.iter().find(|&&x| x >= a.v_size()) {
        return Err(WitnessError::new("range", format!("vertical image {x}")));
    }
    let hi = index_of(&w.h_elems)?;
    let vi = index_of(&w.v_elems)?;
    let h_of = |x: &B::H, what: &str| {
        hi.get(x)
            .copied()
            .ok_or_else(|| WitnessError::new("closure", format!("{what} leaves the horizontal part")))
    };
    let v_of = |x: &B::V, what: &str| {
        vi.get(x)
            .copied()
            .ok_or_else(|| WitnessError::new("closure", format!("{what} leaves the vertical part")))
    };
    let z = h_of(&b.zero(), "zero")?;
    if w.h_map[z] != a.zero() {
        return Err(WitnessError::new("homomorphism", "zero is not mapped to zero"));
    }
    let o = v_of(&b.one(), "one")?;
    if w.v_map[o] != a.one() {
        return Err(WitnessError::new("homomorphism", "one is not mapped to one"));
    }
    for (i, x) in w.h_elems.iter().enumerate() {
        for (j, y) in w.h_elems.iter().enumerate() {
            let s = h_of(&b.add(x, y), "add")?;
            if w.h_map[s] != a.add(&w.h_map[i], &w.h_map[j]) {
                return Err(WitnessError::new("homomorphism", format!("add at ({i},{j})")));
            }
        }
        for (j, v) in w.v_elems.iter().enumerate() {
            let s = h_of(&b.act(x, v), "act")?;
            if w.h_map[s] != a.act(&w.h_map[i], &w.v_map[j]) {
                return Err(WitnessError::new("equivariance", format!("act at ({i},{j})")));
            }
        }
    }
    for (i, x) in w.v_elems.iter().enumerate() {
        for (j, y) in w.v_elems.iter().enumerate() {
            let s = v_of(&b.mul(x, y), "mul")?;
            if w.v_map[s] != a.mul(&w.v_map[i], &w.v_map[j]) {
                return Err(WitnessError::new("homomorphism", format!("mul at ({i},{j})")));
            }
        }
        for (j, h) in w.h_elems.iter().enumerate() {
            let s = v_of(&b.ins(x, h), "ins")?;
            if w.v_map[s] != a.ins(&w.v_map[i], &w.h_map[j]) {
                return Err(WitnessError::new("homomorphism", format!("ins at ({i},{j})")));
            }
        }
    }
    let hs: BTreeSet<usize> = w.h_map.iter().copied().collect();
    let vs: BTreeSet<usize> = w.v_map.iter().copied().collect();
    if hs.len() != a.h_size() || vs.len() != a.v_size() {
        return Err(WitnessError::new("surjectivity", "maps do not cover the target"));
    }
    Ok(())
}

/// Exhaustive check of a tm-division witness of `a` by `b`.
pub fn verify_tm_division<B: ForestAlgebra>(
    a: &FiniteForestAlgebra,
    b: &B,
    w: &TmDivisionWitness<B::H, B::V>,
) -> Result<(), WitnessError> {
    if w.k.len() != w.psi.len() || w.hat.len() != a.v_size() {
        return Err(WitnessError::new("shape", "Ψ or hat has the wrong length"));
    }
    if let Some(&x) = w.psi.iter().find(|&&x| x >= a.h_size()) {
        return Err(WitnessError::new("range", format!("Ψ value {x}")));
    }
    let ki = index_of(&w.k)?;
    let k_of = |x: &B::H, what: &str| {
        ki.get(x)
            .copied()
            .ok_or_else(|| WitnessError::new("closure", format!("{what} leaves K")))
    };
    let z = k_of(&b.zero(), "zero")?;
    if w.psi[z] != a.zero() {
        return Err(WitnessError::new("homomorphism", "Ψ(0) is not 0"));
    }
    for (i, x) in w.k.iter().enumerate() {
        for (j, y) in w.k.iter().enumerate().skip(i) {
            let s = k_of(&b.add(x, y), "add")?;
            if w.psi[s] != a.add(&w.psi[i], &w.psi[j]) {
                return Err(WitnessError::new("homomorphism", format!("Ψ(k{i} + k{j})")));
            }
        }
        for (v, hv) in w.hat.iter().enumerate() {
            let s = k_of(&b.act(x, hv), "action of a lift")?;
            if w.psi[s] != a.act(&w.psi[i], &v) {
                return Err(WitnessError::new("equivariance", format!("Ψ(k{i}·hat({v}))")));
            }
        }
    }
    let hs: BTreeSet<usize> = w.psi.iter().copied().collect();
    if hs.len() != a.h_size() {
        return Err(WitnessError::new("surjectivity", "Ψ misses part of H"));
    }
    Ok(())
}

/// Division to tm-division: `K` is the horizontal part of the subalgebra,
/// `Ψ` its map, and `hat(v)` the first listed preimage of `v`.
pub fn division_to_tm<B: ForestAlgebra>(
    a: &FiniteForestAlgebra,
    b: &B,
    w: &DivisionWitness<B::H, B::V>,
) -> Result<TmDivisionWitness<B::H, B::V>, AlgebraError> {
    verify_division(a, b, w)?;
    let hat = (0..a.v_size())
        .map(|v| {
            let i = w.v_map.iter().position(|&x| x == v).expect("surjective");
            w.v_elems[i].clone()
        })
        .collect();
    Ok(TmDivisionWitness {
        k: w.h_elems.clone(),
        psi: w.h_map.clone(),
        hat,
    })
}

/// Tm-division to division. Each vertical element of `a` is treated as a
/// letter `γ`, lifted by `δ = hat`; the image of `δ` is closed together with
/// `γ` and must be functional, which yields the homomorphism onto `a`.
pub fn tm_to_division<B: ForestAlgebra>(
    a: &FiniteForestAlgebra,
    b: &B,
    w: &TmDivisionWitness<B::H, B::V>,
    budget: usize,
) -> Result<DivisionWitness<B::H, B::V>, AlgebraError> {
    verify_tm_division(a, b, w)?;
    let mut hp: Vec<(B::H, usize)> = vec![(b.zero(), a.zero())];
    let mut vp: Vec<(B::V, usize)> = vec![(b.one(), a.one())];
    let mut h_seen: HashMap<B::H, usize> = HashMap::new();
    let mut v_seen: HashMap<B::V, usize> = HashMap::new();
    h_seen.insert(b.zero(), a.zero());
    v_seen.insert(b.one(), a.one());
    let letters: Vec<(B::V, usize)> = w.hat.iter().cloned().zip(0..a.v_size()).collect();
    let conflict = |what: &str| AlgebraError::Witness(WitnessError::new("factorization", format!("{what} is not functional")));
    let (mut hd, mut vd) = (0usize, 0usize);
    while hd < hp.len() || vd < vp.len() {
        if hp.len() + vp.len() > budget {
            return Err(AlgebraError::Budget {
                required: hp.len() + vp.len(),
                budget,
            });
        }
        let (he, ve) = (hp.len(), vp.len());
        let mut new_h = Vec::new();
        let mut new_v = Vec::new();
        for i in hd..he {
            for j in 0..=i {
                new_h.push((b.add(&hp[i].0, &hp[j].0), a.add(&hp[i].1, &hp[j].1)));
            }
            for (l, v) in &letters {
                new_h.push((b.act(&hp[i].0, l), a.act(&hp[i].1, v)));
            }
            for (x, y) in &vp[..ve] {
                new_v.push((b.ins(x, &hp[i].0), a.ins(y, &hp[i].1)));
            }
        }
        for i in vd..ve {
            for (l, v) in &letters {
                new_v.push((b.mul(&vp[i].0, l), a.mul(&vp[i].1, v)));
            }
            for (x, y) in &hp[..hd] {
                new_v.push((b.ins(&vp[i].0, x), a.ins(&vp[i].1, y)));
            }
        }
        hd = he;
        vd = ve;
        for (x, y) in new_h {
            match h_seen.get(&x) {
                Some(&z) if z != y => return Err(conflict("horizontal image")),
                Some(_) => {}
                None => {
                    h_seen.insert(x.clone(), y);
                    hp.push((x, y));
                }
            }
        }
        for (x, y) in new_v {
            match v_seen.get(&x) {
                Some(&z) if z != y => return Err(conflict("vertical image")),
                Some(_) => {}
                None => {
                    v_seen.insert(x.clone(), y);
                    vp.push((x, y));
                }
            }
        }
    }
    let out = DivisionWitness {
        h_elems: hp.iter().map(|p| p.0.clone()).collect(),
        h_map: hp.iter().map(|p| p.1).collect(),
        v_elems: vp.iter().map(|p| p.0.clone()).collect(),
        v_map: vp.iter().map(|p| p.1).collect(),
    };
    verify_division(a, b, &out)?;
    Ok(out)
}

/// Limits for [`search_division`].
#[derive(Debug, Clone, Copy)]
pub struct SearchCaps {
    pub max_h: usize,
    pub max_v: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps { max_h: 8, max_v: 12 }
    }
}

/// Searches for a division of `a` by `b`, enumerating subalgebras of `b` by
/// vertical generator sets and surjective homomorphisms from each onto `a`.
pub fn search_division(
    a: &FiniteForestAlgebra,
    b: &FiniteForestAlgebra,
    caps: SearchCaps,
) -> Result<Option<DivisionWitness<usize, usize>>, AlgebraError> {
    if b.h_size() > caps.max_h || b.v_size() > caps.max_v {
        return Err(AlgebraError::Cap(format!(
            "target has |H|={} |V|={}, caps are {} and {}",
            b.h_size(),
            b.v_size(),
            caps.max_h,
            caps.max_v
        )));
    }
    let m = b.v_size();
    let mut seen: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut masks: Vec<u32> = (0..(1u32 << m)).collect();
    masks.sort_by_key(|x| (x.count_ones(), *x));
    for mask in masks {
        let gens: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let sub = generated_subalgebra(b, &[], &gens, usize::MAX)?;
        let mut key = (sub.h_elems.clone(), sub.v_elems.clone());
        key.0.sort_unstable();
        key.1.sort_unstable();
        if !seen.insert(key) {
            continue;
        }
        if sub.h_elems.len() < a.h_size() || sub.algebra.v_size() < a.v_size() {
            continue;
        }
        if let Some(w) = find_quotient_map(a, b, &sub) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn find_quotient_map(
    a: &FiniteForestAlgebra,
    b: &FiniteForestAlgebra,
    sub: &Subalgebra<usize, usize>,
) -> Option<DivisionWitness<usize, usize>> {
    let hs = &sub.h_elems;
    let pos: HashMap<usize, usize> = hs.iter().enumerate().map(|(i, &h)| (h, i)).collect();
    let mut assign: Vec<Option<usize>> = vec![None; hs.len()];
    assign[pos[&b.zero()]] = Some(a.zero());

    fn consistent(
        a: &FiniteForestAlgebra,
        b: &FiniteForestAlgebra,
        hs: &[usize],
        pos: &HashMap<usize, usize>,
        assign: &[Option<usize>],
        i: usize,
    ) -> bool {
        let Some(x) = assign[i] else { return true };
        for (j, y) in assign.iter().enumerate() {
            let Some(y) = y else { continue };
            let s = pos[&b.add(&hs[i], &hs[j])];
            if let Some(z) = assign[s] {
                if z != a.add(&x, y) {
                    return false;
                }
            }
        }
        true
    }

    fn complete(
        a: &FiniteForestAlgebra,
        b: &FiniteForestAlgebra,
        sub: &Subalgebra<usize, usize>,
        pos: &HashMap<usize, usize>,
        phi: &[usize],
    ) -> Option<DivisionWitness<usize, usize>> {
        let hs = &sub.h_elems;
        if phi.iter().collect::<BTreeSet<_>>().len() != a.h_size() {
            return None;
        }
        let mut v_map = Vec::with_capacity(sub.v_elems.len());
        for v in &sub.v_elems {
            // required action of the image of v on every element of a's H
            let mut need: Vec<Option<usize>> = vec![None; a.h_size()];
            for (i, h) in hs.iter().enumerate() {
                let t = phi[pos[&b.act(h, v)]];
                match need[phi[i]] {
                    Some(x) if x != t => return None,
                    _ => need[phi[i]] = Some(t),
                }
            }
            let need: Vec<usize> = need.into_iter().map(|x| x.expect("surjective")).collect();
            let u = (0..a.v_size()).find(|&u| a.action_column(u) == need)?;
            v_map.push(u);
        }
        let w = DivisionWitness {
            h_elems: hs.clone(),
            h_map: phi.to_vec(),
            v_elems: sub.v_elems.clone(),
            v_map,
        };
        verify_division(a, b, &w).ok().map(|_| w)
    }

    fn go(
        a: &FiniteForestAlgebra,
        b: &FiniteForestAlgebra,
        sub: &Subalgebra<usize, usize>,
        pos: &HashMap<usize, usize>,
        assign: &mut Vec<Option<usize>>,
        i: usize,
    ) -> Option<DivisionWitness<usize, usize>> {
        if i == assign.len() {
            let phi: Vec<usize> = assign.iter().map(|x| x.unwrap()).collect();
            return complete(a, b, sub, pos, &phi);
        }
        if assign[i].is_some() {
            return go(a, b, sub, pos, assign, i + 1);
        }
        for x in 0..a.h_size() {
            assign[i] = Some(x);
            if consistent(a, b, &sub.h_elems, pos, assign, i) {
                if let Some(w) = go(a, b, sub, pos, assign, i + 1) {
                    return Some(w);
                }
            }
        }
        assign[i] = None;
        None
    }

    go(a, b, sub, &pos, &mut assign, 0)
}
