//! Finite forest categories, diagrams over them, and the global
//! idempotent-commutative checks.
//!
//! Objects and half-arrows form commutative monoids, `end` maps half-arrows
//! onto objects additively, arrows compose along matching endpoints, act on
//! half-arrows, and admit insertion `ins(u, c) : start(u) → end(u) + end(c)`.
//! Besides the listed axioms, validation checks `r·ins(u, d) = r·u + d`,
//! which is what makes diagram evaluation independent of the parse.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{FiniteForestAlgebra, FlatSubsetAlgebra, ForestAlgebra};

/// A failed axiom, with the ids that instantiate it.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{axiom}: {detail}")]
pub struct CategoryViolation {
    pub axiom: String,
    pub detail: String,
}

fn violation(axiom: &str, detail: impl Into<String>) -> CategoryViolation {
    CategoryViolation {
        axiom: axiom.to_string(),
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMonoid {
    pub size: usize,
    pub add: Vec<Vec<usize>>,
    pub zero: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHalfArrows {
    pub size: usize,
    pub add: Vec<Vec<usize>>,
    pub zero: usize,
    pub end: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawArrow {
    pub start: usize,
    pub end: usize,
}

/// Category file layout. `comp` lists `[u, v, u·v]`, `act` lists
/// `[c, u, c·u]` and `ins` lists `[u, c, ins(u, c)]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCategory {
    pub objects: RawMonoid,
    pub half_arrows: RawHalfArrows,
    pub arrows: Vec<RawArrow>,
    pub identities: Vec<usize>,
    pub comp: Vec<[usize; 3]>,
    pub act: Vec<[usize; 3]>,
    pub ins: Vec<[usize; 3]>,
}

/// A validated finite forest category with dense operation tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestCategory {
    n_obj: usize,
    obj_add: Vec<usize>,
    obj_zero: usize,
    n_harr: usize,
    harr_add: Vec<usize>,
    harr_zero: usize,
    harr_end: Vec<usize>,
    start: Vec<usize>,
    end: Vec<usize>,
    identity: Vec<usize>,
    comp: Vec<Option<usize>>,
    act: Vec<Option<usize>>,
    ins: Vec<Option<usize>>,
}

fn monoid_table(rows: &[Vec<usize>], n: usize, what: &str) -> Result<Vec<usize>, CategoryViolation> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(violation("shape", format!("{what} table must be {n}x{n}")));
    }
    let t: Vec<usize> = rows.iter().flatten().copied().collect();
    if let Some(x) = t.iter().find(|&&x| x >= n) {
        return Err(violation("shape", format!("{what} table value {x} out of range")));
    }
    Ok(t)
}

fn check_comm_monoid(t: &[usize], n: usize, zero: usize, what: &str) -> Result<(), CategoryViolation> {
    let axiom = if what == "objects" { "d" } else { "e" };
    if zero >= n {
        return Err(violation(axiom, format!("{what} zero out of range")));
    }
    for x in 0..n {
        if t[zero * n + x] != x {
            return Err(violation(axiom, format!("{what}: 0 + {x} != {x}")));
        }
        for y in 0..n {
            if t[x * n + y] != t[y * n + x] {
                return Err(violation(axiom, format!("{what}: {x} + {y} not commutative")));
            }
            for z in 0..n {
                if t[t[x * n + y] * n + z] != t[x * n + t[y * n + z]] {
                    return Err(violation(axiom, format!("{what}: ({x},{y},{z}) not associative")));
                }
            }
        }
    }
    Ok(())
}

/// Checks every axiom exhaustively and returns the first violation.
pub fn validate_category(raw: &RawCategory) -> Result<ForestCategory, CategoryViolation> {
    let n_obj = raw.objects.size;
    let n_harr = raw.half_arrows.size;
    let n_arr = raw.arrows.len();
    let obj_add = monoid_table(&raw.objects.add, n_obj, "objects")?;
    let harr_add = monoid_table(&raw.half_arrows.add, n_harr, "half_arrows")?;
    check_comm_monoid(&obj_add, n_obj, raw.objects.zero, "objects")?;
    check_comm_monoid(&harr_add, n_harr, raw.half_arrows.zero, "half_arrows")?;
    let harr_end = raw.half_arrows.end.clone();
    if harr_end.len() != n_harr || harr_end.iter().any(|&x| x >= n_obj) {
        return Err(violation("shape", "half_arrows.end must map every half-arrow to an object"));
    }
    for c in 0..n_harr {
        for d in 0..n_harr {
            if harr_end[harr_add[c * n_harr + d]] != obj_add[harr_end[c] * n_obj + harr_end[d]] {
                return Err(violation("e", format!("end(h{c} + h{d}) != end(h{c}) + end(h{d})")));
            }
        }
    }
    if harr_end[raw.half_arrows.zero] != raw.objects.zero {
        return Err(violation("e", "end(0) != 0"));
    }
    for x in 0..n_obj {
        if !harr_end.contains(&x) {
            return Err(violation("e", format!("end is not onto: no half-arrow ends at object {x}")));
        }
    }
    let start: Vec<usize> = raw.arrows.iter().map(|a| a.start).collect();
    let end: Vec<usize> = raw.arrows.iter().map(|a| a.end).collect();
    if start.iter().chain(&end).any(|&x| x >= n_obj) {
        return Err(violation("b", "arrow endpoint out of range"));
    }
    if raw.identities.len() != n_obj || raw.identities.iter().any(|&u| u >= n_arr) {
        return Err(violation("f", "one identity arrow per object required"));
    }
    let mut comp = vec![None; n_arr * n_arr];
    for &[u, v, w] in &raw.comp {
        if u >= n_arr || v >= n_arr || w >= n_arr {
            return Err(violation("f", format!("comp entry [{u},{v},{w}] out of range")));
        }
        if end[u] != start[v] || start[w] != start[u] || end[w] != end[v] {
            return Err(violation("f", format!("comp entry [{u},{v},{w}] has wrong endpoints")));
        }
        if comp[u * n_arr + v].replace(w).is_some_and(|old| old != w) {
            return Err(violation("f", format!("comp u{u}·u{v} defined twice")));
        }
    }
    let mut act = vec![None; n_harr * n_arr];
    for &[c, u, d] in &raw.act {
        if c >= n_harr || u >= n_arr || d >= n_harr {
            return Err(violation("g", format!("act entry [{c},{u},{d}] out of range")));
        }
        if harr_end[c] != start[u] || harr_end[d] != end[u] {
            return Err(violation("g", format!("act entry [{c},{u},{d}] has wrong endpoints")));
        }
        if act[c * n_arr + u].replace(d).is_some_and(|old| old != d) {
            return Err(violation("g", format!("act h{c}·u{u} defined twice")));
        }
    }
    let mut ins = vec![None; n_arr * n_harr];
    for &[u, c, w] in &raw.ins {
        if u >= n_arr || c >= n_harr || w >= n_arr {
            return Err(violation("h", format!("ins entry [{u},{c},{w}] out of range")));
        }
        if start[w] != start[u] || end[w] != obj_add[end[u] * n_obj + harr_end[c]] {
            return Err(violation("h", format!("ins entry [{u},{c},{w}] has wrong endpoints")));
        }
        if ins[u * n_harr + c].replace(w).is_some_and(|old| old != w) {
            return Err(violation("h", format!("ins(u{u}, h{c}) defined twice")));
        }
    }
    let cat = ForestCategory {
        n_obj,
        obj_add,
        obj_zero: raw.objects.zero,
        n_harr,
        harr_add,
        harr_zero: raw.half_arrows.zero,
        harr_end,
        start,
        end,
        identity: raw.identities.clone(),
        comp,
        act,
        ins,
    };
    cat.check_axioms()?;
    Ok(cat)
}

impl ForestCategory {
    fn check_axioms(&self) -> Result<(), CategoryViolation> {
        let na = self.n_arrows();
        let nh = self.n_harr;
        // totality on composable pairs
        for u in 0..na {
            for v in 0..na {
                if self.end[u] == self.start[v] && self.comp[u * na + v].is_none() {
                    return Err(violation("f", format!("u{u}·u{v} undefined")));
                }
            }
            for c in 0..nh {
                if self.harr_end[c] == self.start[u] && self.act[c * na + u].is_none() {
                    return Err(violation("g", format!("h{c}·u{u} undefined")));
                }
                if self.ins[u * nh + c].is_none() {
                    return Err(violation("h", format!("ins(u{u}, h{c}) undefined")));
                }
            }
        }
        for (x, &i) in self.identity.iter().enumerate() {
            if self.start[i] != x || self.end[i] != x {
                return Err(violation("f", format!("identity of object {x} is not a loop at {x}")));
            }
            for u in 0..na {
                if self.end[u] == x && self.comp(u, i) != Some(u) {
                    return Err(violation("f", format!("u{u}·1_{x} != u{u}")));
                }
                if self.start[u] == x && self.comp(i, u) != Some(u) {
                    return Err(violation("f", format!("1_{x}·u{u} != u{u}")));
                }
            }
            for c in 0..nh {
                if self.harr_end[c] == x && self.act(c, i) != Some(c) {
                    return Err(violation("g", format!("h{c}·1_{x} != h{c}")));
                }
            }
        }
        for u in 0..na {
            for v in self.arrows_from(self.end[u]) {
                let uv = self.comp(u, v).expect("total");
                for w in self.arrows_from(self.end[v]) {
                    if self.comp(uv, w) != self.comp(u, self.comp(v, w).expect("total")) {
                        return Err(violation("f", format!("(u{u}·u{v})·u{w} != u{u}·(u{v}·u{w})")));
                    }
                }
            }
        }
        for c in 0..nh {
            for u in self.arrows_from(self.harr_end[c]) {
                let cu = self.act(c, u).expect("total");
                for v in self.arrows_from(self.end[u]) {
                    if self.act(cu, v) != self.act(c, self.comp(u, v).expect("total")) {
                        return Err(violation("g", format!("(h{c}·u{u})·u{v} != h{c}·(u{u}·u{v})")));
                    }
                }
            }
        }
        let mut seen: HashMap<(usize, usize, Vec<usize>), usize> = HashMap::new();
        for u in 0..na {
            let col: Vec<usize> = self
                .harr_to(self.start[u])
                .map(|c| self.act(c, u).expect("total"))
                .collect();
            if let Some(&prev) = seen.get(&(self.start[u], self.end[u], col.clone())) {
                return Err(violation("g", format!("not faithful: u{prev} and u{u} act identically")));
            }
            seen.insert((self.start[u], self.end[u], col), u);
        }
        for u in 0..na {
            for c in 0..nh {
                let w = self.ins(u, c).expect("total");
                for f in self.arrows_to(self.start[u]) {
                    let fu = self.comp(f, u).expect("total");
                    if self.comp(f, w) != self.ins(fu, c) {
                        return Err(violation("h", format!("u{f}·ins(u{u},h{c}) != ins(u{f}·u{u},h{c})")));
                    }
                }
                for g in 0..nh {
                    if self.ins(w, g) != self.ins(u, self.add_h(c, g)) {
                        return Err(violation("h", format!("ins(ins(u{u},h{c}),h{g}) != ins(u{u},h{c}+h{g})")));
                    }
                }
                for r in self.harr_to(self.start[u]) {
                    let lhs = self.act(r, w).expect("total");
                    let rhs = self.add_h(self.act(r, u).expect("total"), c);
                    if lhs != rhs {
                        return Err(violation("h", format!("h{r}·ins(u{u},h{c}) != h{r}·u{u} + h{c}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The one-object category of a forest algebra.
    pub fn from_algebra(alg: &FiniteForestAlgebra) -> ForestCategory {
        let (n, m) = (alg.h_size(), alg.v_size());
        let raw = RawCategory {
            objects: RawMonoid {
                size: 1,
                add: vec![vec![0]],
                zero: 0,
            },
            half_arrows: RawHalfArrows {
                size: n,
                add: (0..n).map(|x| (0..n).map(|y| alg.add(&x, &y)).collect()).collect(),
                zero: alg.zero(),
                end: vec![0; n],
            },
            arrows: vec![RawArrow { start: 0, end: 0 }; m],
            identities: vec![alg.one()],
            comp: (0..m)
                .flat_map(|u| (0..m).map(move |v| [u, v, alg.mul(&u, &v)]))
                .collect(),
            act: (0..n)
                .flat_map(|c| (0..m).map(move |u| [c, u, alg.act(&c, &u)]))
                .collect(),
            ins: (0..m)
                .flat_map(|u| (0..n).map(move |c| [u, c, alg.ins(&u, &c)]))
                .collect(),
        };
        validate_category(&raw).expect("a forest algebra is a one-object forest category")
    }

    pub fn to_raw(&self) -> RawCategory {
        let na = self.n_arrows();
        let nh = self.n_harr;
        let rows = |t: &[usize], n: usize| (0..n).map(|i| t[i * n..(i + 1) * n].to_vec()).collect();
        RawCategory {
            objects: RawMonoid {
                size: self.n_obj,
                add: rows(&self.obj_add, self.n_obj),
                zero: self.obj_zero,
            },
            half_arrows: RawHalfArrows {
                size: nh,
                add: rows(&self.harr_add, nh),
                zero: self.harr_zero,
                end: self.harr_end.clone(),
            },
            arrows: (0..na)
                .map(|u| RawArrow {
                    start: self.start[u],
                    end: self.end[u],
                })
                .collect(),
            identities: self.identity.clone(),
            comp: (0..na)
                .flat_map(|u| (0..na).filter_map(move |v| self.comp(u, v).map(|w| [u, v, w])))
                .collect(),
            act: (0..nh)
                .flat_map(|c| (0..na).filter_map(move |u| self.act(c, u).map(|d| [c, u, d])))
                .collect(),
            ins: (0..na)
                .flat_map(|u| (0..nh).filter_map(move |c| self.ins(u, c).map(|w| [u, c, w])))
                .collect(),
        }
    }

    pub fn n_objects(&self) -> usize {
        self.n_obj
    }

    pub fn n_half_arrows(&self) -> usize {
        self.n_harr
    }

    pub fn n_arrows(&self) -> usize {
        self.start.len()
    }

    pub fn add_obj(&self, x: usize, y: usize) -> usize {
        self.obj_add[x * self.n_obj + y]
    }

    pub fn obj_zero(&self) -> usize {
        self.obj_zero
    }

    pub fn add_h(&self, c: usize, d: usize) -> usize {
        self.harr_add[c * self.n_harr + d]
    }

    pub fn harr_zero(&self) -> usize {
        self.harr_zero
    }

    pub fn harr_end(&self, c: usize) -> usize {
        self.harr_end[c]
    }

    pub fn start(&self, u: usize) -> usize {
        self.start[u]
    }

    pub fn end(&self, u: usize) -> usize {
        self.end[u]
    }

    pub fn identity(&self, x: usize) -> usize {
        self.identity[x]
    }

    pub fn comp(&self, u: usize, v: usize) -> Option<usize> {
        self.comp[u * self.n_arrows() + v]
    }

    pub fn act(&self, c: usize, u: usize) -> Option<usize> {
        self.act[c * self.n_arrows() + u]
    }

    pub fn ins(&self, u: usize, c: usize) -> Option<usize> {
        self.ins[u * self.n_harr + c]
    }

    pub fn arrows_from(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_arrows()).filter(move |&u| self.start[u] == x)
    }

    pub fn arrows_to(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_arrows()).filter(move |&u| self.end[u] == x)
    }

    pub fn harr_to(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_harr).filter(move |&c| self.harr_end[c] == x)
    }

    pub fn objects_idempotent(&self) -> bool {
        (0..self.n_obj).all(|x| self.add_obj(x, x) == x)
    }

    /// Index of an element in support sets: half-arrow `c` is `c`, arrow
    /// `u` is `n_half_arrows + u`.
    pub fn support_index(&self, e: Element) -> usize {
        match e {
            Element::Half(c) => c,
            Element::Arrow(u) => self.n_harr + u,
        }
    }

    pub fn support_universe(&self) -> usize {
        self.n_harr + self.n_arrows()
    }

    fn single(&self, e: Element) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.support_universe());
        b.insert(self.support_index(e));
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Element {
    Half(usize),
    Arrow(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Half(c) => write!(f, "h{c}"),
            Element::Arrow(u) => write!(f, "u{u}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("arrow u{arrow} starts at {start} but its children end at {rootsum}")]
    Endpoint { arrow: usize, start: usize, rootsum: usize },
    #[error("hole object {hole} does not match the first frame")]
    Hole { hole: usize },
    #[error("id out of range: {0}")]
    Range(Element),
}

/// One tree of a forest diagram: a half-arrow leaf or an arrow over a forest
/// of subdiagrams. An arrow over the empty forest must start at the zero
/// object, like a leaf `a` is `0·a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Diagram {
    Leaf(usize),
    Node(usize, Vec<Diagram>),
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagram::Leaf(c) => write!(f, "h{c}"),
            Diagram::Node(u, kids) => write!(f, "u{u}({})", ForestDiagram(kids.clone())),
        }
    }
}

/// A forest diagram: a sum of tree diagrams, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ForestDiagram(pub Vec<Diagram>);

impl fmt::Display for ForestDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Evaluation strategies; all must agree on a valid category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseOrder {
    /// Sum the children, then act by the node arrow.
    Direct,
    /// Act on the first child by `ins(1, rest)·u`.
    PivotFirst,
    /// Act on the last child by `ins(1, rest)·u`.
    PivotLast,
}

impl ForestCategory {
    fn check_harr(&self, c: usize) -> Result<(), DiagramError> {
        if c < self.n_harr {
            Ok(())
        } else {
            Err(DiagramError::Range(Element::Half(c)))
        }
    }

    fn check_arrow(&self, u: usize) -> Result<(), DiagramError> {
        if u < self.n_arrows() {
            Ok(())
        } else {
            Err(DiagramError::Range(Element::Arrow(u)))
        }
    }

    pub fn rootsum(&self, d: &ForestDiagram) -> Result<usize, DiagramError> {
        let mut x = self.obj_zero;
        for t in &d.0 {
            let e = match t {
                Diagram::Leaf(c) => {
                    self.check_harr(*c)?;
                    self.harr_end[*c]
                }
                Diagram::Node(u, _) => {
                    self.check_arrow(*u)?;
                    self.end[*u]
                }
            };
            x = self.add_obj(x, e);
        }
        Ok(x)
    }

    pub fn eval_diagram(&self, d: &ForestDiagram) -> Result<usize, DiagramError> {
        self.eval_forest_with(&d.0, ParseOrder::Direct)
    }

    pub fn eval_with(&self, d: &ForestDiagram, order: ParseOrder) -> Result<usize, DiagramError> {
        self.eval_forest_with(&d.0, order)
    }

    fn eval_forest_with(&self, ts: &[Diagram], order: ParseOrder) -> Result<usize, DiagramError> {
        let mut acc = self.harr_zero;
        for t in ts {
            acc = self.add_h(acc, self.eval_tree(t, order)?);
        }
        Ok(acc)
    }

    fn eval_tree(&self, t: &Diagram, order: ParseOrder) -> Result<usize, DiagramError> {
        match t {
            Diagram::Leaf(c) => {
                self.check_harr(*c)?;
                Ok(*c)
            }
            Diagram::Node(u, kids) => {
                let u = *u;
                self.check_arrow(u)?;
                let rootsum = self.rootsum(&ForestDiagram(kids.clone()))?;
                if rootsum != self.start[u] {
                    return Err(DiagramError::Endpoint {
                        arrow: u,
                        start: self.start[u],
                        rootsum,
                    });
                }
                let pivot = match order {
                    _ if kids.is_empty() => return Ok(self.act(self.harr_zero, u).expect("endpoints checked")),
                    ParseOrder::Direct => {
                        let r = self.eval_forest_with(kids, order)?;
                        return Ok(self.act(r, u).expect("endpoints checked"));
                    }
                    ParseOrder::PivotFirst => 0,
                    ParseOrder::PivotLast => kids.len() - 1,
                };
                let p = self.eval_tree(&kids[pivot], order)?;
                let rest: Vec<Diagram> = kids
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != pivot)
                    .map(|(_, k)| k.clone())
                    .collect();
                let r = self.eval_forest_with(&rest, order)?;
                let lift = self.ins(self.identity[self.harr_end[p]], r).expect("total");
                let arrow = self.comp(lift, u).expect("endpoints checked");
                Ok(self.act(p, arrow).expect("endpoints checked"))
            }
        }
    }

    pub fn support(&self, d: &ForestDiagram) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.support_universe());
        fn walk(c: &ForestCategory, t: &Diagram, b: &mut FixedBitSet) {
            match t {
                Diagram::Leaf(h) => b.insert(c.support_index(Element::Half(*h))),
                Diagram::Node(u, kids) => {
                    b.insert(c.support_index(Element::Arrow(*u)));
                    kids.iter().for_each(|k| walk(c, k, b));
                }
            }
        }
        d.0.iter().for_each(|t| walk(self, t, &mut b));
        b
    }

    pub fn support_elements(&self, b: &FixedBitSet) -> Vec<Element> {
        b.ones()
            .map(|i| {
                if i < self.n_harr {
                    Element::Half(i)
                } else {
                    Element::Arrow(i - self.n_harr)
                }
            })
            .collect()
    }

    pub fn eval_context_diagram(&self, d: &ContextDiagram) -> Result<usize, DiagramError> {
        let mut y = d.hole;
        if y >= self.n_obj {
            return Err(DiagramError::Hole { hole: y });
        }
        let sib = self.eval_diagram(&d.hole_siblings)?;
        let mut e = self.ins(self.identity[y], sib).expect("total");
        y = self.end[e];
        for (u, sibs) in &d.frames {
            self.check_arrow(*u)?;
            if self.start[*u] != y {
                return Err(DiagramError::Endpoint {
                    arrow: *u,
                    start: self.start[*u],
                    rootsum: y,
                });
            }
            e = self.comp(e, *u).expect("checked");
            let s = self.eval_diagram(sibs)?;
            e = self.ins(e, s).expect("total");
            y = self.end[e];
        }
        Ok(e)
    }

    pub fn context_support(&self, d: &ContextDiagram) -> FixedBitSet {
        let mut b = self.support(&d.hole_siblings);
        for (u, sibs) in &d.frames {
            b.insert(self.support_index(Element::Arrow(*u)));
            b.union_with(&self.support(sibs));
        }
        b
    }
}

/// A context diagram: a hole exposing `hole`, with siblings, then a chain of
/// arrows outwards, each with its own siblings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextDiagram {
    pub hole: usize,
    pub hole_siblings: ForestDiagram,
    pub frames: Vec<(usize, ForestDiagram)>,
}

impl fmt::Display for ContextDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut inner = format!("[{}]", self.hole);
        if !self.hole_siblings.0.is_empty() {
            inner = format!("{inner}+{}", self.hole_siblings);
        }
        for (u, sibs) in &self.frames {
            inner = format!("u{u}({inner})");
            if !sibs.0.is_empty() {
                inner = format!("{inner}+{sibs}");
            }
        }
        write!(f, "{inner}")
    }
}

/// Outcome of one identity over all its instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityOutcome {
    pub holds: bool,
    pub instances: usize,
    pub failures: usize,
    /// Ids instantiating the first failure, with the two differing values.
    pub witness: Option<IdentityWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityWitness {
    pub ids: Vec<(String, usize)>,
    pub left: usize,
    pub right: usize,
}

#[derive(Default)]
struct Tally {
    instances: usize,
    failures: usize,
    witness: Option<IdentityWitness>,
}

impl Tally {
    fn check(&mut self, left: usize, right: usize, ids: impl FnOnce() -> Vec<(String, usize)>) {
        self.instances += 1;
        if left != right {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(IdentityWitness { ids: ids(), left, right });
            }
        }
    }

    fn finish(self) -> IdentityOutcome {
        IdentityOutcome {
            holds: self.failures == 0,
            instances: self.instances,
            failures: self.failures,
            witness: self.witness,
        }
    }
}

fn ids(pairs: &[(&str, usize)]) -> Vec<(String, usize)> {
    pairs.iter().map(|(n, i)| (n.to_string(), *i)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    /// Precondition of the characterization: objects idempotent.
    pub objects_idempotent: bool,
    pub loop_removal: IdentityOutcome,
    pub horizontal_absorption: IdentityOutcome,
    pub horizontal_idempotence: IdentityOutcome,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.loop_removal.holds && self.horizontal_absorption.holds && self.horizontal_idempotence.holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivedIdentityReport {
    pub vertical_idempotence: IdentityOutcome,
    pub horizontal_swap: IdentityOutcome,
    pub nested_insertion_variant: IdentityOutcome,
    pub horizontal_transfer: IdentityOutcome,
}

impl DerivedIdentityReport {
    pub fn all_hold(&self) -> bool {
        self.vertical_idempotence.holds
            && self.horizontal_swap.holds
            && self.nested_insertion_variant.holds
            && self.horizontal_transfer.holds
    }
}

impl ForestCategory {
    fn a(&self, c: usize, u: usize) -> usize {
        self.act(c, u).expect("composable")
    }

    fn m(&self, u: usize, v: usize) -> usize {
        self.comp(u, v).expect("composable")
    }

    /// Objects `y` with `x + y = z`.
    fn has_complement(&self, x: usize, z: usize) -> bool {
        (0..self.n_obj).any(|y| self.add_obj(x, y) == z)
    }

    /// Loop removal, horizontal absorption and horizontal idempotence,
    /// checked on every instance.
    pub fn check_identities(&self) -> IdentityReport {
        let mut lr = Tally::default();
        for r in 0..self.n_harr {
            let y = self.harr_end[r];
            let loops: Vec<usize> = self.arrows_from(y).filter(|&s| self.end[s] == y).collect();
            let outs: Vec<usize> = self.arrows_from(y).collect();
            for &s in &loops {
                let rs = self.a(r, s);
                for &t1 in &outs {
                    for &t2 in &outs {
                        let rst2 = self.a(rs, t2);
                        let left = self.add_h(self.a(rs, t1), rst2);
                        let right = self.add_h(self.a(r, t1), rst2);
                        lr.check(left, right, || ids(&[("r", r), ("s", s), ("t1", t1), ("t2", t2)]));
                    }
                }
            }
        }
        let mut ha = Tally::default();
        for r in 0..self.n_harr {
            let x = self.harr_end[r];
            let us: Vec<usize> = self.arrows_from(x).collect();
            for s in 0..self.n_harr {
                let xy = self.harr_end[s];
                if !self.has_complement(x, xy) {
                    continue;
                }
                let rs = self.add_h(r, s);
                if self.harr_end[rs] != xy {
                    // only possible when objects are not idempotent
                    continue;
                }
                for t in self.arrows_from(xy) {
                    for &u in &us {
                        let ru = self.a(r, u);
                        let left = self.add_h(self.a(rs, t), ru);
                        let right = self.add_h(self.a(s, t), ru);
                        ha.check(left, right, || ids(&[("r", r), ("s", s), ("t", t), ("u", u)]));
                    }
                }
            }
        }
        let mut hi = Tally::default();
        for r in 0..self.n_harr {
            hi.check(self.add_h(r, r), r, || ids(&[("r", r)]));
        }
        IdentityReport {
            objects_idempotent: self.objects_idempotent(),
            loop_removal: lr.finish(),
            horizontal_absorption: ha.finish(),
            horizontal_idempotence: hi.finish(),
        }
    }

    /// The four identities derived from the three above. Horizontal transfer
    /// is checked over multicontext diagrams with at most four nodes: the
    /// three holes plus at most one arrow over a nonempty subset of them.
    pub fn check_derived_identities(&self) -> DerivedIdentityReport {
        let mut vi = Tally::default();
        for u in 0..self.n_arrows() {
            if self.start[u] == self.end[u] {
                vi.check(self.m(u, u), u, || ids(&[("u", u)]));
            }
        }
        let mut hs = Tally::default();
        for x in 0..self.n_obj {
            let hx: Vec<usize> = self.harr_to(x).collect();
            let outs: Vec<usize> = self.arrows_from(x).collect();
            for &r in &hx {
                for &s in &hx {
                    for &t in &outs {
                        for &u in &outs {
                            let left = self.add_h(self.a(r, t), self.a(s, u));
                            let right = self.add_h(self.a(s, t), self.a(r, u));
                            hs.check(left, right, || ids(&[("r", r), ("s", s), ("t", t), ("u", u)]));
                        }
                    }
                }
            }
        }
        let mut ni = Tally::default();
        for r in 0..self.n_harr {
            let x = self.harr_end[r];
            for t in 0..self.n_harr {
                let xy = self.add_obj(x, self.harr_end[t]);
                let rt = self.add_h(r, t);
                for u in self.arrows_from(x).filter(|&u| self.end[u] == xy) {
                    let ru = self.a(r, u);
                    let inner = self.add_h(ru, t);
                    if self.harr_end[inner] != xy {
                        continue;
                    }
                    for s in self.arrows_from(xy) {
                        let left = self.add_h(self.a(rt, s), ru);
                        let right = self.add_h(self.a(inner, s), ru);
                        ni.check(left, right, || ids(&[("r", r), ("t", t), ("s", s), ("u", u)]));
                    }
                }
            }
        }
        DerivedIdentityReport {
            vertical_idempotence: vi.finish(),
            horizontal_swap: hs.finish(),
            nested_insertion_variant: ni.finish(),
            horizontal_transfer: self.check_horizontal_transfer(),
        }
    }

    fn check_horizontal_transfer(&self) -> IdentityOutcome {
        let mut tally = Tally::default();
        for v in 0..self.n_harr {
            let x = self.harr_end[v];
            for w in 0..self.n_harr {
                let vw = self.add_h(v, w);
                let xy = self.harr_end[vw];
                for u in self.harr_to(xy).collect::<Vec<_>>() {
                    let uw = self.add_h(u, w);
                    if self.harr_end[uw] != xy {
                        continue;
                    }
                    // hole values for the two sides; objects are (x+y, x, x+y)
                    let lhs = [vw, v, u];
                    let rhs = [uw, v, u];
                    let objs = [xy, x, xy];
                    for mask in 0u8..8 {
                        let under: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
                        let eval = |vals: &[usize; 3], arrow: Option<usize>| -> usize {
                            let mut top = self.harr_zero;
                            let mut below = self.harr_zero;
                            for i in 0..3 {
                                if mask & (1 << i) != 0 {
                                    below = self.add_h(below, vals[i]);
                                } else {
                                    top = self.add_h(top, vals[i]);
                                }
                            }
                            match arrow {
                                Some(a) => self.add_h(top, self.a(below, a)),
                                None => self.add_h(top, below),
                            }
                        };
                        if under.is_empty() {
                            let (l, r) = (eval(&lhs, None), eval(&rhs, None));
                            tally.check(l, r, || ids(&[("v", v), ("w", w), ("u", u)]));
                            continue;
                        }
                        let start = under.iter().fold(self.obj_zero, |acc, &i| self.add_obj(acc, objs[i]));
                        for a in self.arrows_from(start) {
                            let (l, r) = (eval(&lhs, Some(a)), eval(&rhs, Some(a)));
                            tally.check(l, r, || {
                                ids(&[("v", v), ("w", w), ("u", u), ("arrow", a), ("holes_under_arrow", mask as usize)])
                            });
                        }
                    }
                }
            }
        }
        tally.finish()
    }
}

/// Two diagrams with equal support and rootsum but different values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalIcWitness {
    pub first: ForestDiagram,
    pub second: ForestDiagram,
}

#[derive(Debug, Clone)]
enum Recipe {
    Empty,
    Leaf(usize),
    Node(usize, usize),
    Sum(usize, usize),
}

struct DiagramTable {
    entries: Vec<(FixedBitSet, usize)>,
    recipes: Vec<Recipe>,
    index: HashMap<(FixedBitSet, usize), usize>,
}

impl DiagramTable {
    fn new() -> Self {
        DiagramTable {
            entries: Vec::new(),
            recipes: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push(&mut self, supp: FixedBitSet, val: usize, recipe: Recipe) -> Option<usize> {
        let key = (supp, val);
        if self.index.contains_key(&key) {
            return None;
        }
        self.index.insert(key.clone(), self.entries.len());
        self.entries.push(key);
        self.recipes.push(recipe);
        Some(self.entries.len() - 1)
    }

    fn diagram(&self, i: usize) -> ForestDiagram {
        match &self.recipes[i] {
            Recipe::Empty => ForestDiagram::default(),
            Recipe::Leaf(c) => ForestDiagram(vec![Diagram::Leaf(*c)]),
            Recipe::Node(u, j) => ForestDiagram(vec![Diagram::Node(*u, self.diagram(*j).0)]),
            Recipe::Sum(j, k) => {
                let mut d = self.diagram(*j).0;
                d.extend(self.diagram(*k).0);
                ForestDiagram(d)
            }
        }
    }
}

impl ForestCategory {
    /// Searches all forest diagrams with at most `max_nodes` nodes for two
    /// with the same support and rootsum but different values.
    ///
    /// Diagrams are tracked by `(support, value)`: every way of extending a
    /// diagram depends only on that pair, so keeping the first (smallest)
    /// representative of each pair enumerates exactly the pairs realized by
    /// diagrams within the bound.
    pub fn brute_force_global_ic(&self, max_nodes: usize) -> Option<GlobalIcWitness> {
        let mut table = DiagramTable::new();
        let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); max_nodes + 1];
        let mut bucket: HashMap<(FixedBitSet, usize), usize> = HashMap::new();
        let mut record = |table: &mut DiagramTable, i: usize| -> Option<GlobalIcWitness> {
            let (supp, val) = table.entries[i].clone();
            let key = (supp, self.harr_end[val]);
            match bucket.get(&key) {
                Some(&j) => {
                    let other = table.entries[j].1;
                    (other != val).then(|| GlobalIcWitness {
                        first: table.diagram(j),
                        second: table.diagram(i),
                    })
                }
                None => {
                    bucket.insert(key, i);
                    None
                }
            }
        };
        let empty = table
            .push(FixedBitSet::with_capacity(self.support_universe()), self.harr_zero, Recipe::Empty)
            .expect("first entry");
        by_size[0].push(empty);
        record(&mut table, empty);
        for n in 1..=max_nodes {
            let mut fresh: Vec<(FixedBitSet, usize, Recipe)> = Vec::new();
            if n == 1 {
                for c in 0..self.n_harr {
                    fresh.push((self.single(Element::Half(c)), c, Recipe::Leaf(c)));
                }
            }
            for &f in &by_size[n - 1] {
                let (supp, val) = table.entries[f].clone();
                for u in self.arrows_from(self.harr_end[val]) {
                    let mut s = supp.clone();
                    s.insert(self.support_index(Element::Arrow(u)));
                    fresh.push((s, self.a(val, u), Recipe::Node(u, f)));
                }
            }
            for i in 1..=n / 2 {
                let j = n - i;
                for (x, &f) in by_size[i].iter().enumerate() {
                    let start = if i == j { x } else { 0 };
                    for &g in &by_size[j][start..] {
                        let mut s = table.entries[f].0.clone();
                        s.union_with(&table.entries[g].0);
                        let val = self.add_h(table.entries[f].1, table.entries[g].1);
                        fresh.push((s, val, Recipe::Sum(f, g)));
                    }
                }
            }
            for (s, v, r) in fresh {
                if let Some(i) = table.push(s, v, r) {
                    by_size[n].push(i);
                    if let Some(w) = record(&mut table, i) {
                        return Some(w);
                    }
                }
            }
        }
        None
    }
}

/// Covering sets for every half-arrow and arrow of a category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering<H, V> {
    pub harr: Vec<Vec<H>>,
    pub arr: Vec<Vec<V>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("cover closure exceeded budget {budget} (reached {reached})")]
    Budget { reached: usize, budget: usize },
}

/// A subset cover together with the elements its bits stand for.
#[derive(Debug, Clone)]
pub struct FlatCover {
    /// Bit `i` of a covering set stands for `generators[i]`.
    pub generators: Vec<Element>,
    pub algebra: FlatSubsetAlgebra,
    pub covering: Covering<FixedBitSet, FixedBitSet>,
}

impl ForestCategory {
    /// Whether every half-arrow is the value of a forest diagram and every
    /// arrow the value of a context diagram using only `gens`.
    pub fn generates(&self, gens: &[Element]) -> bool {
        let halves: Vec<usize> = gens.iter().filter_map(|e| if let Element::Half(c) = e { Some(*c) } else { None }).collect();
        let arrows: Vec<usize> = gens.iter().filter_map(|e| if let Element::Arrow(u) = e { Some(*u) } else { None }).collect();
        let mut hseen = vec![false; self.n_harr];
        let mut hlist = vec![self.harr_zero];
        hseen[self.harr_zero] = true;
        for &c in &halves {
            if !hseen[c] {
                hseen[c] = true;
                hlist.push(c);
            }
        }
        let mut i = 0;
        while i < hlist.len() {
            let c = hlist[i];
            let mut fresh: Vec<usize> = arrows
                .iter()
                .filter(|&&u| self.start[u] == self.harr_end[c])
                .map(|&u| self.a(c, u))
                .collect();
            fresh.extend(hlist[..=i].iter().map(|&d| self.add_h(c, d)));
            for d in fresh {
                if !hseen[d] {
                    hseen[d] = true;
                    hlist.push(d);
                }
            }
            i += 1;
        }
        if hlist.len() < self.n_harr {
            return false;
        }
        let mut aseen = vec![false; self.n_arrows()];
        let mut alist: Vec<usize> = Vec::new();
        for &e in &self.identity {
            if !aseen[e] {
                aseen[e] = true;
                alist.push(e);
            }
        }
        let mut i = 0;
        while i < alist.len() {
            let e = alist[i];
            let mut fresh: Vec<usize> = arrows.iter().filter(|&&u| self.start[u] == self.end[e]).map(|&u| self.m(e, u)).collect();
            fresh.extend((0..self.n_harr).map(|c| self.ins(e, c).expect("total")));
            for f in fresh {
                if !aseen[f] {
                    aseen[f] = true;
                    alist.push(f);
                }
            }
            i += 1;
        }
        alist.len() == self.n_arrows()
    }

    /// A generating set obtained from all elements by dropping, in order,
    /// every element the rest still generates. Half-arrows are tried first.
    pub fn generating_set(&self) -> Vec<Element> {
        let mut gens: Vec<Element> = (0..self.n_harr)
            .map(Element::Half)
            .chain((0..self.n_arrows()).map(Element::Arrow))
            .collect();
        let mut i = 0;
        while i < gens.len() {
            let mut trial = gens.clone();
            trial.remove(i);
            if self.generates(&trial) {
                gens = trial;
            } else {
                i += 1;
            }
        }
        gens
    }

    /// The subset cover: `X` covers `u` when some forest or context diagram
    /// with support `X` has value `u`. Diagrams are built from a generating
    /// set only, which keeps the universe small; the result is a division
    /// exactly when the category is globally idempotent and commutative,
    /// as for the cover over all elements. `budget` bounds the number of
    /// realizable `(support, value)` pairs.
    pub fn canonical_flat_cover(&self, budget: usize) -> Result<FlatCover, CoverError> {
        self.flat_cover_over(&self.generating_set(), budget)
    }

    /// The subset cover over every half-arrow and arrow.
    pub fn full_flat_cover(&self, budget: usize) -> Result<FlatCover, CoverError> {
        let all: Vec<Element> = (0..self.n_harr)
            .map(Element::Half)
            .chain((0..self.n_arrows()).map(Element::Arrow))
            .collect();
        self.flat_cover_over(&all, budget)
    }

    /// The subset cover using diagrams over `gens`. Elements not generated
    /// get empty covering sets.
    pub fn flat_cover_over(&self, gens: &[Element], budget: usize) -> Result<FlatCover, CoverError> {
        let universe = gens.len();
        let empty = FixedBitSet::with_capacity(universe);
        let bit = |i: usize| {
            let mut b = FixedBitSet::with_capacity(universe);
            b.insert(i);
            b
        };
        let halves: Vec<(usize, usize)> = gens
            .iter()
            .enumerate()
            .filter_map(|(i, e)| if let Element::Half(c) = e { Some((i, *c)) } else { None })
            .collect();
        let arrows: Vec<(usize, usize)> = gens
            .iter()
            .enumerate()
            .filter_map(|(i, e)| if let Element::Arrow(u) = e { Some((i, *u)) } else { None })
            .collect();
        let over = |reached: usize| CoverError::Budget { reached, budget };
        type Pairs = (Vec<(FixedBitSet, usize)>, HashSet<(FixedBitSet, usize)>);
        let push = |x: (FixedBitSet, usize), st: &mut Pairs| -> Result<(), CoverError> {
            if st.1.insert(x.clone()) {
                st.0.push(x);
                if st.0.len() > budget {
                    return Err(over(st.0.len()));
                }
            }
            Ok(())
        };
        // forest diagrams, including the empty one; trees are kept apart so
        // sums only need a tree on one side
        let mut forests: Pairs = (Vec::new(), HashSet::new());
        let mut trees: Pairs = (Vec::new(), HashSet::new());
        push((empty.clone(), self.harr_zero), &mut forests)?;
        for &(i, c) in &halves {
            push((bit(i), c), &mut trees)?;
        }
        let (mut fi, mut ti) = (0, 0);
        while fi < forests.0.len() || ti < trees.0.len() {
            while fi < forests.0.len() {
                let (s, v) = forests.0[fi].clone();
                for &(i, u) in arrows.iter().filter(|&&(_, u)| self.start[u] == self.harr_end[v]) {
                    let mut t = s.clone();
                    t.insert(i);
                    push((t, self.a(v, u)), &mut trees)?;
                }
                for j in 0..ti {
                    let mut t = s.clone();
                    t.union_with(&trees.0[j].0);
                    push((t, self.add_h(v, trees.0[j].1)), &mut forests)?;
                }
                fi += 1;
            }
            while ti < trees.0.len() {
                let (s, v) = trees.0[ti].clone();
                for j in 0..fi {
                    let mut t = s.clone();
                    t.union_with(&forests.0[j].0);
                    push((t, self.add_h(v, forests.0[j].1)), &mut forests)?;
                }
                ti += 1;
            }
        }
        // context diagrams: a chain of ins steps collapses to one, so each
        // step is an arrow or a single insertion of a forest
        let mut contexts: Pairs = (Vec::new(), HashSet::new());
        for y in 0..self.n_obj {
            push((empty.clone(), self.identity[y]), &mut contexts)?;
        }
        let mut i = 0;
        while i < contexts.0.len() {
            let (s, e) = contexts.0[i].clone();
            for &(b, u) in arrows.iter().filter(|&&(_, u)| self.start[u] == self.end[e]) {
                let mut t = s.clone();
                t.insert(b);
                push((t, self.m(e, u)), &mut contexts)?;
            }
            for (fs, fv) in &forests.0 {
                let mut t = s.clone();
                t.union_with(fs);
                push((t, self.ins(e, *fv).expect("total")), &mut contexts)?;
            }
            i += 1;
        }
        let mut cov = Covering {
            harr: vec![Vec::new(); self.n_harr],
            arr: vec![Vec::new(); self.n_arrows()],
        };
        for (s, v) in forests.0 {
            cov.harr[v].push(s);
        }
        for (s, e) in contexts.0 {
            cov.arr[e].push(s);
        }
        for k in cov.harr.iter_mut().chain(cov.arr.iter_mut()) {
            k.sort();
        }
        Ok(FlatCover {
            generators: gens.to_vec(),
            algebra: FlatSubsetAlgebra::new(universe),
            covering: cov,
        })
    }
}

/// A violated division clause with the instantiating ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverViolation {
    pub clause: String,
    pub ids: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct CoveringReport {
    /// Number of violations per clause.
    pub counts: BTreeMap<String, usize>,
    /// First violation of each clause.
    pub examples: Vec<CoverViolation>,
}

impl CoveringReport {
    pub fn ok(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn fails(&self, clause: &str) -> bool {
        self.counts.contains_key(clause)
    }

    fn add(&mut self, clause: &str, ids: Vec<Element>) {
        let n = self.counts.entry(clause.to_string()).or_insert(0);
        if *n == 0 {
            self.examples.push(CoverViolation {
                clause: clause.to_string(),
                ids,
            });
        }
        *n += 1;
    }
}

pub const CLAUSE_NONEMPTY: &str = "nonempty";
pub const CLAUSE_COMPOSITION: &str = "a.i composition";
pub const CLAUSE_ACTION: &str = "a.ii action";
pub const CLAUSE_SUM: &str = "a.iii sum";
pub const CLAUSE_INSERTION: &str = "a.iv insertion";
pub const CLAUSE_INJECTIVE_ARROWS: &str = "b.i injectivity arrows";
pub const CLAUSE_INJECTIVE_HALF: &str = "b.ii injectivity half-arrows";

/// Exhaustive check of the division axioms for a covering of `cat` by `alg`.
/// An empty covering set is reported and the remaining clauses still run.
pub fn verify_covering<A: ForestAlgebra>(
    cat: &ForestCategory,
    alg: &A,
    cov: &Covering<A::H, A::V>,
) -> CoveringReport {
    let mut rep = CoveringReport::default();
    if cov.harr.len() != cat.n_half_arrows() || cov.arr.len() != cat.n_arrows() {
        rep.add("shape", Vec::new());
        return rep;
    }
    let hset: Vec<HashSet<&A::H>> = cov.harr.iter().map(|k| k.iter().collect()).collect();
    let vset: Vec<HashSet<&A::V>> = cov.arr.iter().map(|k| k.iter().collect()).collect();
    for (c, k) in cov.harr.iter().enumerate() {
        if k.is_empty() {
            rep.add(CLAUSE_NONEMPTY, vec![Element::Half(c)]);
        }
    }
    for (u, k) in cov.arr.iter().enumerate() {
        if k.is_empty() {
            rep.add(CLAUSE_NONEMPTY, vec![Element::Arrow(u)]);
        }
    }
    for e in 0..cat.n_arrows() {
        for f in cat.arrows_from(cat.end(e)) {
            let ef = cat.m(e, f);
            'pairs: for x in &cov.arr[e] {
                for y in &cov.arr[f] {
                    if !vset[ef].contains(&alg.mul(x, y)) {
                        rep.add(CLAUSE_COMPOSITION, vec![Element::Arrow(e), Element::Arrow(f)]);
                        break 'pairs;
                    }
                }
            }
        }
    }
    for c in 0..cat.n_half_arrows() {
        for e in cat.arrows_from(cat.harr_end(c)) {
            let ce = cat.a(c, e);
            'pairs: for x in &cov.harr[c] {
                for y in &cov.arr[e] {
                    if !hset[ce].contains(&alg.act(x, y)) {
                        rep.add(CLAUSE_ACTION, vec![Element::Half(c), Element::Arrow(e)]);
                        break 'pairs;
                    }
                }
            }
        }
        for d in c..cat.n_half_arrows() {
            let cd = cat.add_h(c, d);
            'pairs: for x in &cov.harr[c] {
                for y in &cov.harr[d] {
                    if !hset[cd].contains(&alg.add(x, y)) {
                        rep.add(CLAUSE_SUM, vec![Element::Half(c), Element::Half(d)]);
                        break 'pairs;
                    }
                }
            }
        }
        for f in 0..cat.n_arrows() {
            let fc = cat.ins(f, c).expect("total");
            'pairs: for x in &cov.harr[c] {
                for y in &cov.arr[f] {
                    if !vset[fc].contains(&alg.ins(y, x)) {
                        rep.add(CLAUSE_INSERTION, vec![Element::Half(c), Element::Arrow(f)]);
                        break 'pairs;
                    }
                }
            }
        }
    }
    for u in 0..cat.n_arrows() {
        for v in (u + 1)..cat.n_arrows() {
            if cat.start(u) == cat.start(v) && cat.end(u) == cat.end(v) && cov.arr[u].iter().any(|x| vset[v].contains(x)) {
                rep.add(CLAUSE_INJECTIVE_ARROWS, vec![Element::Arrow(u), Element::Arrow(v)]);
            }
        }
    }
    for c in 0..cat.n_half_arrows() {
        for d in (c + 1)..cat.n_half_arrows() {
            if cat.harr_end(c) == cat.harr_end(d) && cov.harr[c].iter().any(|x| hset[d].contains(x)) {
                rep.add(CLAUSE_INJECTIVE_HALF, vec![Element::Half(c), Element::Half(d)]);
            }
        }
    }
    rep
}

/// Convenience: the covering sets of a cover, keyed by element, for reports.
pub fn cover_sizes<H: Clone + Eq + Hash, V: Clone + Eq + Hash>(cov: &Covering<H, V>) -> (usize, usize) {
    (
        cov.harr.iter().map(Vec::len).sum(),
        cov.arr.iter().map(Vec::len).sum(),
    )
}
