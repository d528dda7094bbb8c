//! The derived forest category of a pair of morphisms and the two
//! constructive directions of the derived category theorem.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use thiserror::Error;

use crate::algebra::{
    verify_tm_division, AlgebraError, FiniteForestAlgebra, ForestAlgebra, Morphism, TmDivisionWitness, Wreath,
    WitnessError,
};
use crate::category::{
    validate_category, verify_covering, CategoryViolation, CoveringReport, Covering, ForestCategory, RawArrow,
    RawCategory, RawHalfArrows, RawMonoid,
};
use crate::terms::{Alphabet, Context, Forest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivedError {
    #[error("the two morphisms are over different alphabets")]
    Alphabet,
    #[error("pair closure exceeded budget {budget} ({h} horizontal, {v} vertical pairs so far)")]
    Budget { h: usize, v: usize, budget: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("derived category failed validation: {0}")]
    Category(#[from] CategoryViolation),
    #[error("derived operation not well defined: {0}")]
    WellDefined(String),
    #[error("not surjective: {0}")]
    NotSurjective(String),
    #[error("covering does not verify: {0:?}")]
    InvalidCovering(CoveringReport),
    #[error("factorization fails ({clause}): {detail}")]
    Factorization { clause: String, detail: String },
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error("unknown element {0}")]
    UnknownElement(usize),
}

/// How a horizontal pair was first built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HDeriv {
    Zero,
    Sum(usize, usize),
    /// Adjoin letter `a` (alphabet index) on top of pair `i`.
    Letter(usize, usize),
}

/// How a vertical pair was first built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VDeriv {
    One,
    /// Pair `i` followed by letter `a`.
    Letter(usize, usize),
    /// `ins(pair i, horizontal pair h)`.
    Ins(usize, usize),
}

/// Joint image of the free algebra under two morphisms, with derivations.
#[derive(Debug, Clone)]
pub struct Closure<HA, VA, HB, VB> {
    pub h: Vec<(HA, HB)>,
    pub v: Vec<(VA, VB)>,
    pub h_deriv: Vec<HDeriv>,
    pub v_deriv: Vec<VDeriv>,
    h_index: HashMap<(HA, HB), usize>,
    v_index: HashMap<(VA, VB), usize>,
}

type ClosureOf<A, B> = Closure<<A as ForestAlgebra>::H, <A as ForestAlgebra>::V, <B as ForestAlgebra>::H, <B as ForestAlgebra>::V>;

/// Closes `(0,0)` and `(1,1)` under sums, letters and insertion, level by
/// level, so every derivation has minimal depth.
pub fn joint_closure<A: ForestAlgebra, B: ForestAlgebra>(
    a: &A,
    b: &B,
    la: &[A::V],
    lb: &[B::V],
    budget: usize,
) -> Result<ClosureOf<A, B>, DerivedError> {
    assert_eq!(la.len(), lb.len());
    let mut c = Closure {
        h: Vec::new(),
        v: Vec::new(),
        h_deriv: Vec::new(),
        v_deriv: Vec::new(),
        h_index: HashMap::new(),
        v_index: HashMap::new(),
    };
    fn push<K: Clone + Eq + Hash, D>(list: &mut Vec<K>, derivs: &mut Vec<D>, index: &mut HashMap<K, usize>, x: K, d: D) {
        if !index.contains_key(&x) {
            index.insert(x.clone(), list.len());
            list.push(x);
            derivs.push(d);
        }
    }
    push(&mut c.h, &mut c.h_deriv, &mut c.h_index, (a.zero(), b.zero()), HDeriv::Zero);
    push(&mut c.v, &mut c.v_deriv, &mut c.v_index, (a.one(), b.one()), VDeriv::One);
    let (mut hd, mut vd) = (0, 0);
    while hd < c.h.len() || vd < c.v.len() {
        if c.h.len() + c.v.len() > budget {
            return Err(DerivedError::Budget {
                h: c.h.len(),
                v: c.v.len(),
                budget,
            });
        }
        let (he, ve) = (c.h.len(), c.v.len());
        for i in hd..he {
            for j in 0..=i {
                let x = (a.add(&c.h[i].0, &c.h[j].0), b.add(&c.h[i].1, &c.h[j].1));
                push(&mut c.h, &mut c.h_deriv, &mut c.h_index, x, HDeriv::Sum(j, i));
            }
            for l in 0..la.len() {
                let x = (a.act(&c.h[i].0, &la[l]), b.act(&c.h[i].1, &lb[l]));
                push(&mut c.h, &mut c.h_deriv, &mut c.h_index, x, HDeriv::Letter(i, l));
            }
            for j in 0..ve {
                let x = (a.ins(&c.v[j].0, &c.h[i].0), b.ins(&c.v[j].1, &c.h[i].1));
                push(&mut c.v, &mut c.v_deriv, &mut c.v_index, x, VDeriv::Ins(j, i));
            }
        }
        for i in vd..ve {
            for l in 0..la.len() {
                let x = (a.mul(&c.v[i].0, &la[l]), b.mul(&c.v[i].1, &lb[l]));
                push(&mut c.v, &mut c.v_deriv, &mut c.v_index, x, VDeriv::Letter(i, l));
            }
            for j in 0..hd {
                let x = (a.ins(&c.v[i].0, &c.h[j].0), b.ins(&c.v[i].1, &c.h[j].1));
                push(&mut c.v, &mut c.v_deriv, &mut c.v_index, x, VDeriv::Ins(i, j));
            }
        }
        hd = he;
        vd = ve;
    }
    Ok(c)
}

impl<HA: Clone + Eq + Hash, VA: Clone + Eq + Hash, HB: Clone + Eq + Hash, VB: Clone + Eq + Hash> Closure<HA, VA, HB, VB> {
    pub fn h_position(&self, x: &(HA, HB)) -> Option<usize> {
        self.h_index.get(x).copied()
    }

    pub fn v_position(&self, x: &(VA, VB)) -> Option<usize> {
        self.v_index.get(x).copied()
    }

    /// Replays the derivation of horizontal pair `i`.
    pub fn h_term(&self, alphabet: &Alphabet, i: usize) -> Forest {
        match self.h_deriv[i] {
            HDeriv::Zero => Forest::empty(),
            HDeriv::Sum(j, k) => self.h_term(alphabet, j).add(&self.h_term(alphabet, k)),
            HDeriv::Letter(j, l) => self.h_term(alphabet, j).adjoin(alphabet.labels()[l].clone()),
        }
    }

    /// Replays the derivation of vertical pair `i`.
    pub fn v_term(&self, alphabet: &Alphabet, i: usize) -> Context {
        match self.v_deriv[i] {
            VDeriv::One => Context::hole(),
            VDeriv::Letter(j, l) => self
                .v_term(alphabet, j)
                .compose(&Context::letter(alphabet.labels()[l].clone())),
            VDeriv::Ins(j, h) => self.v_term(alphabet, j).insert(&self.h_term(alphabet, h)),
        }
    }
}

/// The reachable pairs `(α(s), β(s))` and `(α(p), β(p))`.
#[derive(Debug, Clone)]
pub struct PairAlgebra {
    pub alpha: Morphism,
    pub beta: Morphism,
    pub closure: Closure<usize, usize, usize, usize>,
    /// Whether every element of the α algebra is reached.
    pub alpha_onto: bool,
    pub beta_onto: bool,
}

/// A pair-closure element, for [`PairAlgebra::witness_term`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairElement {
    H(usize),
    V(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Forest(Forest),
    Context(Context),
}

pub fn pair_closure(alpha: &Morphism, beta: &Morphism, budget: usize) -> Result<PairAlgebra, DerivedError> {
    if alpha.alphabet() != beta.alphabet() {
        return Err(DerivedError::Alphabet);
    }
    let closure = joint_closure(
        alpha.algebra(),
        beta.algebra(),
        alpha.letter_images(),
        beta.letter_images(),
        budget,
    )?;
    let onto = |hs: BTreeSet<usize>, vs: BTreeSet<usize>, alg: &FiniteForestAlgebra| {
        hs.len() == alg.h_size() && vs.len() == alg.v_size()
    };
    let alpha_onto = onto(
        closure.h.iter().map(|p| p.0).collect(),
        closure.v.iter().map(|p| p.0).collect(),
        alpha.algebra(),
    );
    let beta_onto = onto(
        closure.h.iter().map(|p| p.1).collect(),
        closure.v.iter().map(|p| p.1).collect(),
        beta.algebra(),
    );
    Ok(PairAlgebra {
        alpha: alpha.clone(),
        beta: beta.clone(),
        closure,
        alpha_onto,
        beta_onto,
    })
}

impl PairAlgebra {
    pub fn h_pairs(&self) -> &[(usize, usize)] {
        &self.closure.h
    }

    pub fn v_pairs(&self) -> &[(usize, usize)] {
        &self.closure.v
    }

    pub fn witness_term(&self, e: PairElement) -> Result<Term, DerivedError> {
        let alphabet = self.alpha.alphabet();
        match e {
            PairElement::H(i) if i < self.closure.h.len() => Ok(Term::Forest(self.closure.h_term(alphabet, i))),
            PairElement::V(i) if i < self.closure.v.len() => Ok(Term::Context(self.closure.v_term(alphabet, i))),
            PairElement::H(i) | PairElement::V(i) => Err(DerivedError::UnknownElement(i)),
        }
    }
}

/// Arrow identity in the derived category: start and end objects (as H2
/// values) and the action of the α-coordinate on the α-values compatible
/// with the start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrowKey {
    pub start: usize,
    pub end: usize,
    pub action: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DerivedCategory {
    pub category: ForestCategory,
    /// H2 value of each object.
    pub objects: Vec<usize>,
    /// `R_x`: sorted H1 values paired with each object.
    pub compatible: Vec<Vec<usize>>,
    /// Half-arrow `i` is horizontal pair `i` of the closure.
    pub half_arrows: Vec<(usize, usize)>,
    pub arrows: Vec<ArrowKey>,
    /// First vertical pair realizing each arrow.
    pub arrow_rep: Vec<usize>,
    object_of: HashMap<usize, usize>,
    arrow_of: HashMap<ArrowKey, usize>,
}

/// Cap on members per arrow class re-checked for well-definedness.
const CHECK_PER_CLASS: usize = 6;

impl DerivedCategory {
    pub fn object_of(&self, h2: usize) -> Option<usize> {
        self.object_of.get(&h2).copied()
    }

    pub fn arrow_of(&self, key: &ArrowKey) -> Option<usize> {
        self.arrow_of.get(key).copied()
    }

    /// Arrow of vertical values `(v1, v2)` leaving object `x`.
    pub fn arrow_at(&self, a1: &FiniteForestAlgebra, a2: &FiniteForestAlgebra, x: usize, v1: usize, v2: usize) -> Option<usize> {
        self.arrow_of(&key(a1, a2, &self.compatible[x], self.objects[x], v1, v2))
    }
}

fn key(a1: &FiniteForestAlgebra, a2: &FiniteForestAlgebra, r: &[usize], h2: usize, v1: usize, v2: usize) -> ArrowKey {
    ArrowKey {
        start: h2,
        end: a2.act(&h2, &v2),
        action: r.iter().map(|h1| a1.act(h1, &v1)).collect(),
    }
}

/// Builds the derived category from a complete pair closure.
pub fn derived_category(pa: &PairAlgebra) -> Result<DerivedCategory, DerivedError> {
    let a1 = pa.alpha.algebra();
    let a2 = pa.beta.algebra();
    let hp = pa.h_pairs();
    let vp = pa.v_pairs();
    let objects: Vec<usize> = hp.iter().map(|p| p.1).collect::<BTreeSet<_>>().into_iter().collect();
    let object_of: HashMap<usize, usize> = objects.iter().enumerate().map(|(i, &h)| (h, i)).collect();
    let compatible: Vec<Vec<usize>> = objects
        .iter()
        .map(|&x| hp.iter().filter(|p| p.1 == x).map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    let mut arrows: Vec<ArrowKey> = Vec::new();
    let mut arrow_rep: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut arrow_of: HashMap<ArrowKey, usize> = HashMap::new();
    let mut arrow_obj: Vec<usize> = Vec::new();
    for (x, &h2) in objects.iter().enumerate() {
        for (j, &(v1, v2)) in vp.iter().enumerate() {
            let k = key(a1, a2, &compatible[x], h2, v1, v2);
            match arrow_of.get(&k) {
                Some(&id) => members[id].push(j),
                None => {
                    arrow_of.insert(k.clone(), arrows.len());
                    arrows.push(k);
                    arrow_rep.push(j);
                    members.push(vec![j]);
                    arrow_obj.push(x);
                }
            }
        }
    }
    let n_obj = objects.len();
    let n_harr = hp.len();
    let n_arr = arrows.len();
    let obj = |h2: usize| -> Result<usize, DerivedError> {
        object_of
            .get(&h2)
            .copied()
            .ok_or_else(|| DerivedError::WellDefined(format!("H2 value {h2} is not an object")))
    };
    let harr = |p: (usize, usize)| -> Result<usize, DerivedError> {
        pa.closure
            .h_position(&p)
            .ok_or_else(|| DerivedError::WellDefined(format!("pair {p:?} is not realizable")))
    };
    let arrow = |x: usize, v1: usize, v2: usize| -> Result<usize, DerivedError> {
        let k = key(a1, a2, &compatible[x], objects[x], v1, v2);
        arrow_of
            .get(&k)
            .copied()
            .ok_or_else(|| DerivedError::WellDefined(format!("context pair ({v1},{v2}) at object {x} has no arrow")))
    };
    let sample = |id: usize| members[id].iter().take(CHECK_PER_CLASS).map(|&j| vp[j]).collect::<Vec<_>>();
    let mut comp = Vec::new();
    for u in 0..n_arr {
        let x = arrow_obj[u];
        let y = obj(arrows[u].end)?;
        for w in (0..n_arr).filter(|&w| arrow_obj[w] == y) {
            let mut result = None;
            for &(p1, p2) in &sample(u) {
                for &(q1, q2) in &sample(w) {
                    let r = arrow(x, a1.mul(&p1, &q1), a2.mul(&p2, &q2))?;
                    if result.replace(r).is_some_and(|old| old != r) {
                        return Err(DerivedError::WellDefined(format!("composition of arrows {u} and {w}")));
                    }
                }
            }
            comp.push([u, w, result.expect("nonempty classes")]);
        }
    }
    let mut act = Vec::new();
    let mut ins = Vec::new();
    for c in 0..n_harr {
        let (h1, h2) = hp[c];
        let x = obj(h2)?;
        for u in (0..n_arr).filter(|&u| arrow_obj[u] == x) {
            let mut result = None;
            for &(v1, v2) in &sample(u) {
                let d = harr((a1.act(&h1, &v1), a2.act(&h2, &v2)))?;
                if result.replace(d).is_some_and(|old| old != d) {
                    return Err(DerivedError::WellDefined(format!("action of arrow {u} on half-arrow {c}")));
                }
            }
            act.push([c, u, result.expect("nonempty classes")]);
        }
        for u in 0..n_arr {
            let mut result = None;
            for &(v1, v2) in &sample(u) {
                let w = arrow(arrow_obj[u], a1.ins(&v1, &h1), a2.ins(&v2, &h2))?;
                if result.replace(w).is_some_and(|old| old != w) {
                    return Err(DerivedError::WellDefined(format!("insertion of half-arrow {c} into arrow {u}")));
                }
            }
            ins.push([u, c, result.expect("nonempty classes")]);
        }
    }
    let identities = (0..n_obj)
        .map(|x| arrow(x, a1.one(), a2.one()))
        .collect::<Result<Vec<_>, _>>()?;
    let raw = RawCategory {
        objects: RawMonoid {
            size: n_obj,
            add: objects
                .iter()
                .map(|x| objects.iter().map(|y| obj(a2.add(x, y))).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?,
            zero: obj(a2.zero())?,
        },
        half_arrows: RawHalfArrows {
            size: n_harr,
            add: hp
                .iter()
                .map(|c| {
                    hp.iter()
                        .map(|d| harr((a1.add(&c.0, &d.0), a2.add(&c.1, &d.1))))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
            zero: harr((a1.zero(), a2.zero()))?,
            end: hp.iter().map(|c| obj(c.1)).collect::<Result<Vec<_>, _>>()?,
        },
        arrows: arrows
            .iter()
            .map(|k| Ok(RawArrow { start: obj(k.start)?, end: obj(k.end)? }))
            .collect::<Result<Vec<_>, DerivedError>>()?,
        identities,
        comp,
        act,
        ins,
    };
    let category = validate_category(&raw)?;
    Ok(DerivedCategory {
        category,
        objects,
        compatible,
        half_arrows: hp.to_vec(),
        arrows,
        arrow_rep,
        object_of,
        arrow_of,
    })
}

/// Lifted vertical element of `outer ∘ H2`.
pub type WreathV<L> = (Vec<<L as ForestAlgebra>::V>, usize);
pub type WreathH<L> = (<L as ForestAlgebra>::H, usize);

/// Direction (a): a covering of the derived category by `outer` yields a
/// tm-division of the α algebra into `outer ∘ (β algebra)`. `Ψ(h, h2)` is
/// the α-value of the half-arrow ending at `h2` that `h` covers, and
/// `hat(v) = (f_p, β(p))` where `p` is the first vertical pair with α-value
/// `v` and `f_p(h2)` the least cover of the arrow `p` at `h2`.
pub fn dct_forward<L: ForestAlgebra>(
    pa: &PairAlgebra,
    d: &DerivedCategory,
    outer: &L,
    cov: &Covering<L::H, L::V>,
) -> Result<TmDivisionWitness<WreathH<L>, WreathV<L>>, DerivedError> {
    let rep = verify_covering(&d.category, outer, cov);
    if !rep.ok() {
        return Err(DerivedError::InvalidCovering(rep));
    }
    if !pa.alpha_onto {
        return Err(DerivedError::NotSurjective("α misses part of its algebra".into()));
    }
    let a1 = pa.alpha.algebra();
    let a2 = pa.beta.algebra();
    let mut k: Vec<WreathH<L>> = Vec::new();
    let mut psi = Vec::new();
    let mut seen: HashMap<WreathH<L>, usize> = HashMap::new();
    for (c, &(h1, h2)) in d.half_arrows.iter().enumerate() {
        for h in &cov.harr[c] {
            let e = (h.clone(), h2);
            match seen.get(&e) {
                Some(&old) if old != h1 => {
                    return Err(DerivedError::WellDefined(format!("Ψ at half-arrow {c} is ambiguous")))
                }
                Some(_) => {}
                None => {
                    seen.insert(e.clone(), h1);
                    k.push(e);
                    psi.push(h1);
                }
            }
        }
    }
    let mut hat = Vec::with_capacity(a1.v_size());
    for v in 0..a1.v_size() {
        let j = pa
            .v_pairs()
            .iter()
            .position(|p| p.0 == v)
            .ok_or_else(|| DerivedError::NotSurjective(format!("no context realizes vertical element {v}")))?;
        let (v1, v2) = pa.v_pairs()[j];
        let f = (0..a2.h_size())
            .map(|h2| match d.object_of(h2) {
                Some(x) => {
                    let u = d.arrow_at(a1, a2, x, v1, v2).expect("realizable arrow");
                    cov.arr[u].iter().min().cloned().expect("verified nonempty")
                }
                None => outer.one(),
            })
            .collect();
        hat.push((f, v2));
    }
    let w = TmDivisionWitness { k, psi, hat };
    verify_tm_division(a1, &Wreath::new(outer, a2), &w)?;
    Ok(w)
}

/// Direction (b): given letter images `delta` into `outer ∘ (β algebra)`
/// whose right coordinates are `β`, and such that α factors through the
/// induced morphism, the left coordinates cover the derived category.
/// Half-arrow `(h1, h2)` is covered by the left coordinates of `δ(s)` over
/// forests `s` with `α(s) = h1`, `β(s) = h2`; the arrow of `p` at `x` by
/// `f_q(x)` over contexts `q` equivalent to `p` at `x`.
pub fn dct_backward<L: ForestAlgebra>(
    pa: &PairAlgebra,
    d: &DerivedCategory,
    outer: &L,
    delta: &[WreathV<L>],
    budget: usize,
) -> Result<Covering<L::H, L::V>, DerivedError> {
    let a1 = pa.alpha.algebra();
    let a2 = pa.beta.algebra();
    let alphabet = pa.alpha.alphabet();
    if delta.len() != alphabet.len() {
        return Err(DerivedError::Factorization {
            clause: "shape".into(),
            detail: "one image per letter required".into(),
        });
    }
    for (l, (dv, b)) in delta.iter().zip(pa.beta.letter_images()).enumerate() {
        if dv.1 != *b || dv.0.len() != a2.h_size() {
            return Err(DerivedError::Factorization {
                clause: "π∘δ = β".into(),
                detail: format!("letter {}", alphabet.labels()[l]),
            });
        }
    }
    let wreath = Wreath::new(outer, a2);
    let cl = joint_closure(&wreath, a1, delta, pa.alpha.letter_images(), budget)?;
    let mut gamma_h: HashMap<&WreathH<L>, usize> = HashMap::new();
    for (i, (x, h1)) in cl.h.iter().enumerate() {
        if let Some(&old) = gamma_h.get(x) {
            if old != *h1 {
                return Err(DerivedError::Factorization {
                    clause: "γ∘δ = α".into(),
                    detail: format!("forest {} has the δ-value of a forest with another α-value", cl.h_term(alphabet, i)),
                });
            }
        }
        gamma_h.insert(x, *h1);
    }
    let mut gamma_v: HashMap<&WreathV<L>, usize> = HashMap::new();
    for (i, (x, v1)) in cl.v.iter().enumerate() {
        if let Some(&old) = gamma_v.get(x) {
            if old != *v1 {
                return Err(DerivedError::Factorization {
                    clause: "γ∘δ = α".into(),
                    detail: format!("context {} has the δ-value of a context with another α-value", cl.v_term(alphabet, i)),
                });
            }
        }
        gamma_v.insert(x, *v1);
    }
    let mut harr: Vec<BTreeSet<L::H>> = vec![BTreeSet::new(); d.half_arrows.len()];
    for ((h, h2), h1) in &cl.h {
        let c = pa
            .closure
            .h_position(&(*h1, *h2))
            .ok_or_else(|| DerivedError::WellDefined(format!("pair ({h1},{h2}) missing from the pair closure")))?;
        harr[c].insert(h.clone());
    }
    let mut arr: Vec<BTreeSet<L::V>> = vec![BTreeSet::new(); d.arrows.len()];
    for ((f, v2), v1) in &cl.v {
        for x in 0..d.objects.len() {
            let u = d
                .arrow_at(a1, a2, x, *v1, *v2)
                .ok_or_else(|| DerivedError::WellDefined(format!("context pair ({v1},{v2}) has no arrow at object {x}")))?;
            arr[u].insert(f[d.objects[x]].clone());
        }
    }
    let cov = Covering {
        harr: harr.into_iter().map(|s| s.into_iter().collect()).collect(),
        arr: arr.into_iter().map(|s| s.into_iter().collect()).collect(),
    };
    let rep = verify_covering(&d.category, outer, &cov);
    if !rep.ok() {
        return Err(DerivedError::InvalidCovering(rep));
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FlatSubsetAlgebra;
    use crate::catalog::{contains_a, parity_a};
    use crate::kdefinite::{build_kdef_algebra, TypeUniverse};
    use std::collections::BTreeMap;

    fn trivial_beta(alpha: &Morphism) -> Morphism {
        let letters: BTreeMap<_, _> = alpha.alphabet().labels().iter().map(|l| (l.clone(), 0)).collect();
        Morphism::new(FiniteForestAlgebra::trivial(), alpha.alphabet().clone(), &letters).unwrap()
    }

    #[test]
    fn closure_examples() {
        let a = contains_a(&["a", "b"]);
        let m = a.morphism();
        let same = pair_closure(m, m, 1000).unwrap();
        assert!(same.h_pairs().iter().all(|p| p.0 == p.1));
        assert!(same.v_pairs().iter().all(|p| p.0 == p.1));
        let t = pair_closure(m, &trivial_beta(m), 1000).unwrap();
        let hs: BTreeSet<_> = t.h_pairs().iter().copied().collect();
        assert_eq!(hs, [(0, 0), (1, 0)].into_iter().collect());
        assert!(matches!(pair_closure(m, m, 1), Err(DerivedError::Budget { .. })));
        assert_eq!(t.witness_term(PairElement::H(0)).unwrap(), Term::Forest(Forest::empty()));
        assert_eq!(t.witness_term(PairElement::V(0)).unwrap(), Term::Context(Context::hole()));
        for i in 0..t.h_pairs().len() {
            let Term::Forest(s) = t.witness_term(PairElement::H(i)).unwrap() else { panic!() };
            assert_eq!(m.eval_forest(&s).unwrap(), t.h_pairs()[i].0);
        }
        for i in 0..t.v_pairs().len() {
            let Term::Context(p) = t.witness_term(PairElement::V(i)).unwrap() else { panic!() };
            assert_eq!(m.eval_context(&p).unwrap(), t.v_pairs()[i].0);
        }
    }

    #[test]
    fn trivial_beta_gives_one_object() {
        let a = contains_a(&["a", "b"]);
        let m = a.morphism();
        let pa = pair_closure(m, &trivial_beta(m), 1000).unwrap();
        let d = derived_category(&pa).unwrap();
        assert_eq!(d.category.n_objects(), 1);
        assert_eq!(d.category.n_arrows(), 2);
        assert!(d.category.check_identities().all_hold());
        let fc = d.category.canonical_flat_cover(100_000).unwrap();
        let w = dct_forward(&pa, &d, &fc.algebra, &fc.covering).unwrap();
        assert_eq!(w.hat.len(), 2);
    }

    #[test]
    fn parity_with_beta_one_fails_identities() {
        let r = parity_a(&["a"]);
        let mut u = TypeUniverse::new();
        let kd = build_kdef_algebra(&mut u, r.alphabet(), 1, 10_000).unwrap();
        let pa = pair_closure(r.morphism(), &kd.morphism, 10_000).unwrap();
        let d = derived_category(&pa).unwrap();
        assert!(!d.category.check_identities().all_hold());
    }

    #[test]
    fn forward_and_backward_over_unary_beta_one() {
        let r = contains_a(&["a"]);
        let mut u = TypeUniverse::new();
        let kd = build_kdef_algebra(&mut u, r.alphabet(), 1, 10_000).unwrap();
        let pa = pair_closure(r.morphism(), &kd.morphism, 10_000).unwrap();
        let d = derived_category(&pa).unwrap();
        assert!(d.category.check_identities().all_hold());
        let fc = d.category.canonical_flat_cover(100_000).unwrap();
        dct_forward(&pa, &d, &fc.algebra, &fc.covering).unwrap();
        // δ(a) = (h2 ↦ {a}, β(a)) into the flat algebra on one point
        let one = FlatSubsetAlgebra::new(1);
        let a2 = kd.algebra();
        let delta = vec![(vec![one.singleton(0); a2.h_size()], kd.morphism.letter_images()[0])];
        let back = dct_backward(&pa, &d, &one, &delta, 100_000).unwrap();
        dct_forward(&pa, &d, &one, &back).unwrap();
        let wrong = vec![(delta[0].0.clone(), a2.one())];
        assert!(matches!(
            dct_backward(&pa, &d, &one, &wrong, 100_000),
            Err(DerivedError::Factorization { .. })
        ));
    }
}
