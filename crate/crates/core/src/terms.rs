//! The free forest algebra over a finite alphabet.
//!
//! Forests are finite multisets of labelled trees. Sibling order carries no
//! meaning, so every [`Forest`] is stored in a canonical form: its trees are
//! kept sorted under a fixed structural order (node count, then root label,
//! then children). Two forests are equal as values exactly when their
//! canonical sequences are identical, which makes `==` and hashing cheap.
//!
//! A [`Context`] is a forest with a single hole at a leaf position. It is
//! stored as the path from the hole to the top level: the forest added next
//! to the hole, followed by one [`Frame`] per enclosing node. Substituting
//! `s` into the hole is `s.apply(&p)`; composing `p` into the hole of `q` is
//! `p.compose(&q)`, so that `s.apply(&p.compose(&q)) == s.apply(&p).apply(&q)`.
//!
//! Terms are written root-first: `a(b+c)` is a tree with root `a` and two
//! children, `0` is the empty forest and `[]` is the hole.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown label `{label}` at byte {pos}")]
    UnknownLabel { label: String, pos: usize },
    #[error("invalid label `{0}`")]
    InvalidLabel(String),
    #[error("a context needs exactly one hole, found {0}")]
    HoleCount(usize),
    #[error("label `{0}` is not in the alphabet")]
    NotInAlphabet(String),
}

/// A node label. Labels are nonempty tokens over `[A-Za-z0-9_]`; the bare
/// token `0` is reserved for the empty forest.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Result<Label, TermError> {
        let ok = !name.is_empty()
            && name != "0"
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(Label(Arc::from(name)))
        } else {
            Err(TermError::InvalidLabel(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite alphabet, kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Alphabet {
    labels: Vec<Label>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Alphabet, TermError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for n in names {
            set.insert(Label::new(n.as_ref())?);
        }
        Ok(Alphabet {
            labels: set.into_iter().collect(),
        })
    }

    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Alphabet {
        let set: BTreeSet<Label> = labels.into_iter().collect();
        Alphabet {
            labels: set.into_iter().collect(),
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.labels.binary_search(label).is_ok()
    }

    pub fn get(&self, name: &str) -> Option<&Label> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(name))
            .ok()
            .map(|i| &self.labels[i])
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    label: Label,
    children: Forest,
}

impl Tree {
    pub fn new(label: Label, children: Forest) -> Tree {
        Tree { label, children }
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn children(&self) -> &Forest {
        &self.children
    }

    pub fn size(&self) -> usize {
        1 + self.children.size
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.label.cmp(&other.label))
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A forest in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Forest {
    trees: Vec<Tree>,
    size: usize,
}

impl Ord for Forest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| self.trees.cmp(&other.trees))
    }
}

impl PartialOrd for Forest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Forest {
    pub fn empty() -> Forest {
        Forest::default()
    }

    /// Builds a forest from trees in any order.
    pub fn from_trees(mut trees: Vec<Tree>) -> Forest {
        trees.sort();
        let size = trees.iter().map(Tree::size).sum();
        Forest { trees, size }
    }

    pub fn leaf(label: Label) -> Forest {
        Forest::empty().adjoin(label)
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Multiset union.
    pub fn add(&self, other: &Forest) -> Forest {
        let mut trees = Vec::with_capacity(self.trees.len() + other.trees.len());
        let (mut i, mut j) = (0, 0);
        while i < self.trees.len() && j < other.trees.len() {
            if self.trees[i] <= other.trees[j] {
                trees.push(self.trees[i].clone());
                i += 1;
            } else {
                trees.push(other.trees[j].clone());
                j += 1;
            }
        }
        trees.extend_from_slice(&self.trees[i..]);
        trees.extend_from_slice(&other.trees[j..]);
        Forest {
            trees,
            size: self.size + other.size,
        }
    }

    /// The single tree with root `label` over `self`.
    pub fn adjoin(&self, label: Label) -> Forest {
        let tree = Tree::new(label, self.clone());
        let size = tree.size();
        Forest {
            trees: vec![tree],
            size,
        }
    }

    pub fn apply(&self, ctx: &Context) -> Forest {
        let mut cur = self.add(&ctx.hole_siblings);
        for frame in &ctx.frames {
            cur = cur.adjoin(frame.label.clone()).add(&frame.siblings);
        }
        cur
    }

    /// Re-sorts every sibling list. Values built through this module are
    /// already canonical, so this is the identity on them.
    pub fn canonical(&self) -> Forest {
        let trees = self
            .trees
            .iter()
            .map(|t| Tree::new(t.label.clone(), t.children.canonical()))
            .collect();
        Forest::from_trees(trees)
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        for t in &self.trees {
            out.insert(t.label.clone());
            t.children.collect_labels(out);
        }
    }

    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), TermError> {
        for l in self.labels() {
            if !alphabet.contains(&l) {
                return Err(TermError::NotInAlphabet(l.to_string()));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.trees
            .iter()
            .map(|t| 1 + t.children.depth())
            .max()
            .unwrap_or(0)
    }
}

fn write_forest(f: &mut fmt::Formatter<'_>, forest: &Forest) -> fmt::Result {
    if forest.trees.is_empty() {
        return f.write_str("0");
    }
    write_trees(f, &forest.trees)
}

fn write_trees(f: &mut fmt::Formatter<'_>, trees: &[Tree]) -> fmt::Result {
    for (i, t) in trees.iter().enumerate() {
        if i > 0 {
            f.write_str("+")?;
        }
        f.write_str(t.label.as_str())?;
        if !t.children.is_empty() {
            f.write_str("(")?;
            write_trees(f, &t.children.trees)?;
            f.write_str(")")?;
        }
    }
    Ok(())
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_forest(f, self)
    }
}

impl fmt::Debug for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Forest({self})")
    }
}

/// One level on the path from a context's hole to the top: the enclosing
/// node's label and the siblings of that node.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Frame {
    pub label: Label,
    pub siblings: Forest,
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Context {
    hole_siblings: Forest,
    frames: Vec<Frame>,
}

impl Ord for Context {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.hole_siblings.cmp(&other.hole_siblings))
            .then_with(|| self.frames.cmp(&other.frames))
    }
}

impl PartialOrd for Context {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Context {
    /// The bare hole.
    pub fn hole() -> Context {
        Context::default()
    }

    /// `label([])`.
    pub fn letter(label: Label) -> Context {
        Context {
            hole_siblings: Forest::empty(),
            frames: vec![Frame {
                label,
                siblings: Forest::empty(),
            }],
        }
    }

    /// `[] + forest`.
    pub fn plus(forest: Forest) -> Context {
        Context {
            hole_siblings: forest,
            frames: Vec::new(),
        }
    }

    pub fn from_parts(hole_siblings: Forest, frames: Vec<Frame>) -> Context {
        Context {
            hole_siblings,
            frames,
        }
    }

    pub fn hole_siblings(&self) -> &Forest {
        &self.hole_siblings
    }

    /// Frames ordered from the hole outwards.
    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn is_hole(&self) -> bool {
        self.hole_siblings.is_empty() && self.frames.is_empty()
    }

    /// Number of labelled nodes (the hole is not counted).
    pub fn size(&self) -> usize {
        self.hole_siblings.size
            + self
                .frames
                .iter()
                .map(|fr| 1 + fr.siblings.size)
                .sum::<usize>()
    }

    /// Substitutes `self` into the hole of `outer`.
    pub fn compose(&self, outer: &Context) -> Context {
        let mut out = self.clone();
        match out.frames.last_mut() {
            None => out.hole_siblings = out.hole_siblings.add(&outer.hole_siblings),
            Some(top) => top.siblings = top.siblings.add(&outer.hole_siblings),
        }
        out.frames.extend(outer.frames.iter().cloned());
        out
    }

    /// `self + forest`, i.e. the forest added beside the outermost level.
    pub fn insert(&self, forest: &Forest) -> Context {
        self.compose(&Context::plus(forest.clone()))
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = self.hole_siblings.labels();
        for fr in &self.frames {
            out.insert(fr.label.clone());
            out.extend(fr.siblings.labels());
        }
        out
    }

    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), TermError> {
        for l in self.labels() {
            if !alphabet.contains(&l) {
                return Err(TermError::NotInAlphabet(l.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // the hole-bearing subterm is written first at every level
        let mut inner = String::from("[]");
        if !self.hole_siblings.is_empty() {
            inner.push('+');
            inner.push_str(&self.hole_siblings.to_string());
        }
        for fr in &self.frames {
            let mut next = format!("{}({})", fr.label, inner);
            if !fr.siblings.is_empty() {
                next.push('+');
                next.push_str(&fr.siblings.to_string());
            }
            inner = next;
        }
        f.write_str(&inner)
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Context({self})")
    }
}

/// Either kind of term, as produced by [`parse_term`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Forest(Forest),
    Context(Context),
}

enum RawNode {
    Hole,
    Tree(Label, Vec<RawNode>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: Option<&'a Alphabet>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TermError> {
        Err(TermError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, byte: u8) -> Result<(), TermError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", byte as char))
        }
    }

    fn token(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            // only ASCII bytes were consumed
            Some((start, std::str::from_utf8(&self.src[start..self.pos]).unwrap()))
        }
    }

    fn forest(&mut self) -> Result<Vec<RawNode>, TermError> {
        let save = self.pos;
        if let Some((_, "0")) = self.token() {
            if self.peek() != Some(b'(') {
                return Ok(Vec::new());
            }
        }
        self.pos = save;
        let mut nodes = vec![self.node()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            nodes.push(self.node()?);
        }
        Ok(nodes)
    }

    fn node(&mut self) -> Result<RawNode, TermError> {
        if self.peek() == Some(b'[') {
            self.pos += 1;
            self.expect(b']')?;
            return Ok(RawNode::Hole);
        }
        let Some((start, name)) = self.token() else {
            return self.err("expected a label, `[]` or `0`");
        };
        let label = Label::new(name).map_err(|_| TermError::Syntax {
            pos: start,
            msg: format!("`{name}` cannot be used as a label"),
        })?;
        if let Some(alpha) = self.alphabet {
            if !alpha.contains(&label) {
                return Err(TermError::UnknownLabel {
                    label: name.to_string(),
                    pos: start,
                });
            }
        }
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            children = self.forest()?;
            self.expect(b')')?;
        }
        Ok(RawNode::Tree(label, children))
    }

    fn finish(&mut self) -> Result<(), TermError> {
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }
}

fn count_holes(nodes: &[RawNode]) -> usize {
    nodes
        .iter()
        .map(|n| match n {
            RawNode::Hole => 1,
            RawNode::Tree(_, ch) => count_holes(ch),
        })
        .sum()
}

fn raw_to_forest(nodes: Vec<RawNode>) -> Forest {
    let trees = nodes
        .into_iter()
        .map(|n| match n {
            RawNode::Tree(l, ch) => Tree::new(l, raw_to_forest(ch)),
            RawNode::Hole => unreachable!("holes are counted before conversion"),
        })
        .collect();
    Forest::from_trees(trees)
}

fn raw_to_context(nodes: Vec<RawNode>) -> Context {
    // exactly one hole somewhere in `nodes`
    let mut siblings = Vec::new();
    let mut hole_part = None;
    for n in nodes {
        let has_hole = match &n {
            RawNode::Hole => true,
            RawNode::Tree(_, ch) => count_holes(ch) > 0,
        };
        if has_hole {
            hole_part = Some(n);
        } else {
            siblings.push(n);
        }
    }
    let siblings = raw_to_forest(siblings);
    match hole_part.expect("one hole present") {
        RawNode::Hole => Context::plus(siblings),
        RawNode::Tree(label, ch) => {
            let inner = raw_to_context(ch);
            let mut frames = inner.frames;
            frames.push(Frame { label, siblings });
            Context::from_parts(inner.hole_siblings, frames)
        }
    }
}

fn parse_raw(text: &str, alphabet: Option<&Alphabet>) -> Result<Vec<RawNode>, TermError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        alphabet,
    };
    let nodes = p.forest()?;
    p.finish()?;
    Ok(nodes)
}

/// Parses a forest, rejecting labels outside `alphabet`.
pub fn parse_forest(text: &str, alphabet: &Alphabet) -> Result<Forest, TermError> {
    parse_forest_in(text, Some(alphabet))
}

/// Parses a forest over whatever labels it mentions.
pub fn parse_forest_any(text: &str) -> Result<Forest, TermError> {
    parse_forest_in(text, None)
}

fn parse_forest_in(text: &str, alphabet: Option<&Alphabet>) -> Result<Forest, TermError> {
    let raw = parse_raw(text, alphabet)?;
    match count_holes(&raw) {
        0 => Ok(raw_to_forest(raw)),
        n => Err(TermError::HoleCount(n)),
    }
}

pub fn parse_context(text: &str, alphabet: &Alphabet) -> Result<Context, TermError> {
    parse_context_in(text, Some(alphabet))
}

pub fn parse_context_any(text: &str) -> Result<Context, TermError> {
    parse_context_in(text, None)
}

fn parse_context_in(text: &str, alphabet: Option<&Alphabet>) -> Result<Context, TermError> {
    let raw = parse_raw(text, alphabet)?;
    match count_holes(&raw) {
        1 => Ok(raw_to_context(raw)),
        n => Err(TermError::HoleCount(n)),
    }
}

/// Parses a forest or a context depending on whether a hole occurs.
pub fn parse_term(text: &str, alphabet: Option<&Alphabet>) -> Result<Term, TermError> {
    let raw = parse_raw(text, alphabet)?;
    match count_holes(&raw) {
        0 => Ok(Term::Forest(raw_to_forest(raw))),
        1 => Ok(Term::Context(raw_to_context(raw))),
        n => Err(TermError::HoleCount(n)),
    }
}

/// All canonical trees with exactly `n` nodes, indexed by `n`, up to `max`.
fn trees_by_size(alphabet: &Alphabet, max: usize) -> (Vec<Vec<Tree>>, Vec<Vec<Forest>>) {
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new(); max + 1];
    let mut forests: Vec<Vec<Forest>> = vec![Vec::new(); max + 1];
    forests[0].push(Forest::empty());
    for n in 1..=max {
        let mut level = Vec::new();
        for label in alphabet.labels() {
            for f in &forests[n - 1] {
                level.push(Tree::new(label.clone(), f.clone()));
            }
        }
        level.sort();
        trees[n] = level;
        let mut fs = Vec::new();
        multisets(&trees, n, None, &mut Vec::new(), &mut fs);
        fs.sort();
        forests[n] = fs;
    }
    (trees, forests)
}

/// Non-decreasing sequences of trees of total size `n`, each tree >= `min`.
fn multisets(
    trees: &[Vec<Tree>],
    n: usize,
    min: Option<&Tree>,
    acc: &mut Vec<Tree>,
    out: &mut Vec<Forest>,
) {
    if n == 0 {
        out.push(Forest::from_trees(acc.clone()));
        return;
    }
    for size in 1..=n {
        for t in &trees[size] {
            if let Some(m) = min {
                if t < m {
                    continue;
                }
            }
            acc.push(t.clone());
            let last = acc.last().cloned().unwrap();
            multisets(trees, n - size, Some(&last), acc, out);
            acc.pop();
        }
    }
}

/// Every canonical forest with at most `max_nodes` nodes, exactly once,
/// ordered by node count and then by the canonical structural order.
pub fn enumerate_forests(alphabet: &Alphabet, max_nodes: usize) -> Vec<Forest> {
    let (_, forests) = trees_by_size(alphabet, max_nodes);
    forests.into_iter().flatten().collect()
}

/// Every context with at most `max_nodes` labelled nodes, exactly once,
/// ordered by node count and then structurally.
pub fn enumerate_contexts(alphabet: &Alphabet, max_nodes: usize) -> Vec<Context> {
    let (_, forests) = trees_by_size(alphabet, max_nodes);
    // by_size[n] holds the contexts with exactly n nodes
    let mut by_size: Vec<Vec<Context>> = vec![Vec::new(); max_nodes + 1];
    for (n, fs) in forests.iter().enumerate() {
        for f in fs {
            by_size[n].push(Context::plus(f.clone()));
        }
    }
    for n in 1..=max_nodes {
        let mut extra = Vec::new();
        for m in 0..n {
            let sib_size = n - m - 1;
            for c in &by_size[m] {
                for label in alphabet.labels() {
                    for sib in &forests[sib_size] {
                        let mut frames = c.frames.clone();
                        frames.push(Frame {
                            label: label.clone(),
                            siblings: sib.clone(),
                        });
                        extra.push(Context::from_parts(c.hole_siblings.clone(), frames));
                    }
                }
            }
        }
        by_size[n].extend(extra);
    }
    let mut out: Vec<Context> = by_size.into_iter().flatten().collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn f(s: &str) -> Forest {
        parse_forest_any(s).unwrap()
    }

    fn c(s: &str) -> Context {
        parse_context_any(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert!(f("0").is_empty());
        let s = parse_forest("a(b(a)+a+b)+a(b)", &ab()).unwrap();
        assert_eq!(s.trees().len(), 2);
        assert_eq!(s.size(), 7);
        assert!(matches!(
            parse_forest("a(", &ab()),
            Err(TermError::Syntax { .. })
        ));
        assert!(matches!(
            parse_forest("a+c", &ab()),
            Err(TermError::UnknownLabel { pos: 2, .. })
        ));
        assert!(matches!(parse_forest("0+a", &ab()), Err(TermError::Syntax { .. })));
        assert_eq!(f(" a ( b ) + b "), f("b+a(b)"));
    }

    #[test]
    fn parse_context_examples() {
        assert!(c("[]").is_hole());
        let p = parse_context("a(b(a)+a+b)+a([])", &ab()).unwrap();
        assert_eq!(p.size(), 6);
        assert_eq!(f("b").apply(&p), f("a(b(a)+a+b)+a(b)"));
        assert_eq!(parse_context("a+b", &ab()), Err(TermError::HoleCount(0)));
        assert_eq!(parse_context("[]+a([])", &ab()), Err(TermError::HoleCount(2)));
    }

    #[test]
    fn canonical_identifies_sibling_orders() {
        assert_eq!(f("a(b(a)+a+b)+a(b)"), f("a(b)+a(a+b(a)+b)"));
        assert_eq!(f("a(b(a)+a+b)+a(b)").canonical(), f("a(b(a)+a+b)+a(b)"));
        assert_eq!(f("b+a"), f("a+b"));
        assert_eq!(Forest::empty().canonical(), Forest::empty());
    }

    #[test]
    fn add_and_adjoin() {
        let a = Label::new("a").unwrap();
        let cl = Label::new("c").unwrap();
        assert_eq!(Forest::empty().add(&f("a(b)")), f("a(b)"));
        assert_eq!(f("a").add(&f("a")).to_string(), "a+a");
        assert_eq!(f("a(b)").add(&f("b")), f("b").add(&f("a(b)")));
        assert_eq!(Forest::empty().adjoin(a.clone()), f("a"));
        assert_eq!(f("b").adjoin(a), f("a(b)"));
        assert_eq!(f("a+b").adjoin(cl), f("c(a+b)"));
    }

    #[test]
    fn apply_and_compose() {
        assert_eq!(f("a(b)").apply(&Context::hole()), f("a(b)"));
        assert_eq!(f("b").apply(&c("a([])")), f("a(b)"));
        assert_eq!(f("b+b").apply(&c("a([]+c)+d")), f("a(b+b+c)+d"));
        let p = c("a([]+c)");
        assert_eq!(p.compose(&Context::hole()), p);
        assert_eq!(c("a([])").compose(&c("b([])")), c("b(a([]))"));
        assert_eq!(Context::hole().compose(&p), p);
    }

    #[test]
    fn rendering() {
        assert_eq!(f("b+a(b+a)").to_string(), "b+a(a+b)");
        assert_eq!(c("a([]+c)").to_string(), "a([]+c)");
        assert_eq!(c("a(b(a)+a+b)+a([])").to_string(), "a([])+a(a+b+b(a))");
        assert_eq!(Forest::empty().to_string(), "0");
    }

    #[test]
    fn enumeration_examples() {
        let a = Alphabet::new(["a"]).unwrap();
        assert_eq!(enumerate_forests(&a, 0), vec![Forest::empty()]);
        let got: Vec<String> = enumerate_forests(&a, 2).iter().map(|x| x.to_string()).collect();
        assert_eq!(got, ["0", "a", "a+a", "a(a)"]);
        let got: Vec<String> = enumerate_forests(&ab(), 1).iter().map(|x| x.to_string()).collect();
        assert_eq!(got, ["0", "a", "b"]);
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let all = enumerate_forests(&ab(), 5);
        let set: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        let ctxs = enumerate_contexts(&ab(), 4);
        let set: std::collections::HashSet<_> = ctxs.iter().cloned().collect();
        assert_eq!(set.len(), ctxs.len());
        assert_eq!(enumerate_contexts(&ab(), 0), vec![Context::hole()]);
        // [] , []+a, []+b, a([]), b([])
        assert_eq!(enumerate_contexts(&ab(), 1).len(), 5);
    }
}
