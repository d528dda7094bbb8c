#![allow(dead_code)]

use forestcat_core::algebra::{syntactic_algebra, FiniteForestAlgebra, RawAlgebra, Recognizer, Violation};
use forestcat_core::catalog;
use forestcat_core::category::{validate_category, ForestCategory, RawArrow, RawCategory, RawHalfArrows, RawMonoid};
use forestcat_core::derived::{derived_category, pair_closure, DerivedCategory, PairAlgebra};
use forestcat_core::kdefinite::{build_kdef_algebra, lt_recognizer, KdefAlgebra, LtSpec, TypeUniverse};
use forestcat_core::terms::Alphabet;

pub fn alphabet(names: &[&str]) -> Alphabet {
    Alphabet::new(names.iter().copied()).unwrap()
}

pub fn flat(table: &[Vec<usize>]) -> FiniteForestAlgebra {
    FiniteForestAlgebra::flat(table, 0).unwrap().0
}

/// Objects `{0, x}`, half-arrows `z: 0`, `c: x`, arrows `1_0`, `1_x`, `k: 0 → x`.
pub fn two_object() -> RawCategory {
    RawCategory {
        objects: RawMonoid {
            size: 2,
            add: vec![vec![0, 1], vec![1, 1]],
            zero: 0,
        },
        half_arrows: RawHalfArrows {
            size: 2,
            add: vec![vec![0, 1], vec![1, 1]],
            zero: 0,
            end: vec![0, 1],
        },
        arrows: vec![
            RawArrow { start: 0, end: 0 },
            RawArrow { start: 1, end: 1 },
            RawArrow { start: 0, end: 1 },
        ],
        identities: vec![0, 1],
        comp: vec![[0, 0, 0], [1, 1, 1], [0, 2, 2], [2, 1, 2]],
        act: vec![[0, 0, 0], [1, 1, 1], [0, 2, 1]],
        ins: vec![[0, 0, 0], [0, 1, 2], [1, 0, 1], [1, 1, 1], [2, 0, 2], [2, 1, 2]],
    }
}

/// Objects `{0, x}`, half-arrows `z: 0` and `c ≤ d: x`, arrows `1_0`, `1_x`,
/// `k, k2: 0 → x` and an idempotent loop `m: x → x` sending `c` to `d`.
pub fn two_object_with_loop() -> RawCategory {
    let pairs = |v: &[(usize, usize, usize)]| v.iter().map(|&(a, b, c)| [a, b, c]).collect::<Vec<_>>();
    let mut ins = Vec::new();
    for (u, c_img, d_img) in [(0, 2, 4), (1, 1, 3), (2, 2, 4), (3, 3, 3), (4, 4, 4)] {
        ins.extend([[u, 0, u], [u, 1, c_img], [u, 2, d_img]]);
    }
    RawCategory {
        objects: RawMonoid {
            size: 2,
            add: vec![vec![0, 1], vec![1, 1]],
            zero: 0,
        },
        half_arrows: RawHalfArrows {
            size: 3,
            add: vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]],
            zero: 0,
            end: vec![0, 1, 1],
        },
        arrows: vec![
            RawArrow { start: 0, end: 0 },
            RawArrow { start: 1, end: 1 },
            RawArrow { start: 0, end: 1 },
            RawArrow { start: 1, end: 1 },
            RawArrow { start: 0, end: 1 },
        ],
        identities: vec![0, 1],
        comp: pairs(&[
            (0, 0, 0),
            (1, 1, 1),
            (0, 2, 2),
            (0, 4, 4),
            (2, 1, 2),
            (4, 1, 4),
            (1, 3, 3),
            (3, 1, 3),
            (3, 3, 3),
            (2, 3, 4),
            (4, 3, 4),
        ]),
        act: pairs(&[(0, 0, 0), (1, 1, 1), (2, 1, 2), (0, 2, 1), (0, 4, 2), (1, 3, 2), (2, 3, 2)]),
        ins,
    }
}

pub fn pair_with_kdef(r: &Recognizer, names: &[&str], k: usize) -> (PairAlgebra, KdefAlgebra) {
    let syn = syntactic_algebra(r);
    let mut u = TypeUniverse::new();
    let kd = build_kdef_algebra(&mut u, &alphabet(names), k, 100_000).unwrap();
    let pa = pair_closure(syn.recognizer.morphism(), &kd.morphism, 1_000_000).unwrap();
    (pa, kd)
}

pub fn derived(r: &Recognizer, names: &[&str], k: usize) -> DerivedCategory {
    let (pa, _) = pair_with_kdef(r, names, k);
    derived_category(&pa).unwrap()
}

/// Unary `k`-LT language used to get a larger syntactic algebra over `{a}`.
pub fn unary_lt() -> Recognizer {
    let mut u = TypeUniverse::new();
    let spec = LtSpec::parse("node(a[a!]) & !root(a!)").unwrap();
    lt_recognizer(&mut u, &alphabet(&["a"]), 2, &spec, 10_000).unwrap().recognizer
}

/// The small categories on which the global-IC checks are compared.
pub fn category_suite() -> Vec<(String, ForestCategory)> {
    let mut out = Vec::new();
    let flats: Vec<(&str, Vec<Vec<usize>>)> = vec![
        ("flat trivial", vec![vec![0]]),
        ("flat or", vec![vec![0, 1], vec![1, 1]]),
        ("flat xor", vec![vec![0, 1], vec![1, 0]]),
        ("flat z3", vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]),
        ("flat chain", vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]]),
        (
            "flat diamond",
            vec![vec![0, 1, 2, 3], vec![1, 1, 3, 3], vec![2, 3, 2, 3], vec![3, 3, 3, 3]],
        ),
        ("flat redundant", vec![vec![0, 1, 2], vec![1, 2, 1], vec![2, 1, 2]]),
        ("flat saturating", vec![vec![0, 1, 2], vec![1, 2, 2], vec![2, 2, 2]]),
    ];
    for (name, t) in flats {
        out.push((name.to_string(), ForestCategory::from_algebra(&flat(&t))));
    }
    out.push((
        "syntactic a-has-b-child".into(),
        ForestCategory::from_algebra(syntactic_algebra(&catalog::a_has_b_child()).recognizer.algebra()),
    ));
    out.push((
        "syntactic unary 2-LT".into(),
        ForestCategory::from_algebra(syntactic_algebra(&unary_lt()).recognizer.algebra()),
    ));
    out.push(("two objects".into(), validate_category(&two_object()).unwrap()));
    out.push(("two objects with loop".into(), validate_category(&two_object_with_loop()).unwrap()));
    let a = ["a"];
    let ab = ["a", "b"];
    let derived_cases: Vec<(&str, Recognizer, &[&str], usize)> = vec![
        ("contains-a/{a}", catalog::contains_a(&a), &a, 0),
        ("contains-a/{a}", catalog::contains_a(&a), &a, 1),
        ("contains-a/{a,b}", catalog::contains_a(&ab), &ab, 0),
        ("parity-a/{a}", catalog::parity_a(&a), &a, 0),
        ("parity-a/{a}", catalog::parity_a(&a), &a, 1),
        ("parity-a/{a,b}", catalog::parity_a(&ab), &ab, 0),
        ("even-a/{a}", catalog::even_a(&a), &a, 1),
        ("universal/{a}", catalog::universal_language(&a), &a, 1),
        ("empty/{a,b}", catalog::empty_language(&ab), &ab, 0),
        ("contains-a-redundant/{a,b}", catalog::contains_a_redundant(&ab), &ab, 0),
        ("a-has-b-child", catalog::a_has_b_child(), &ab, 0),
        ("unary 2-LT", unary_lt(), &a, 0),
        ("unary 2-LT", unary_lt(), &a, 1),
    ];
    for (name, r, names, k) in derived_cases {
        out.push((format!("derived {name} k={k}"), derived(&r, names, k).category));
    }
    out
}

/// Law scan written independently of the library validator. Returns a
/// description of the first violated law.
pub fn direct_scan(raw: &RawAlgebra) -> Option<String> {
    let n = raw.h.size;
    let m = raw.v.size;
    let shape_ok = n > 0
        && m > 0
        && raw.h.add.len() == n
        && raw.h.add.iter().all(|r| r.len() == n && r.iter().all(|&x| x < n))
        && raw.v.mul.len() == m
        && raw.v.mul.iter().all(|r| r.len() == m && r.iter().all(|&x| x < m))
        && raw.act.len() == n
        && raw.act.iter().all(|r| r.len() == m && r.iter().all(|&x| x < n))
        && raw.h.zero < n
        && raw.v.one < m
        && raw
            .ins
            .as_ref()
            .is_none_or(|t| t.len() == m && t.iter().all(|r| r.len() == n && r.iter().all(|&x| x < m)));
    if !shape_ok {
        return Some("shape".into());
    }
    let add = |x: usize, y: usize| raw.h.add[x][y];
    let mul = |x: usize, y: usize| raw.v.mul[x][y];
    let act = |h: usize, v: usize| raw.act[h][v];
    let all_h = || 0..n;
    let all_v = || 0..m;
    for x in all_h() {
        for y in all_h() {
            if add(x, y) != add(y, x) {
                return Some(format!("commutativity {x} {y}"));
            }
            for z in all_h() {
                if add(add(x, y), z) != add(x, add(y, z)) {
                    return Some(format!("h associativity {x} {y} {z}"));
                }
            }
        }
        if add(x, raw.h.zero) != x {
            return Some(format!("zero {x}"));
        }
    }
    for x in all_v() {
        if mul(x, raw.v.one) != x || mul(raw.v.one, x) != x {
            return Some(format!("one {x}"));
        }
        for y in all_v() {
            for z in all_v() {
                if mul(mul(x, y), z) != mul(x, mul(y, z)) {
                    return Some(format!("v associativity {x} {y} {z}"));
                }
            }
        }
    }
    for h in all_h() {
        if act(h, raw.v.one) != h {
            return Some(format!("unit action {h}"));
        }
        for v in all_v() {
            for w in all_v() {
                if act(act(h, v), w) != act(h, mul(v, w)) {
                    return Some(format!("action {h} {v} {w}"));
                }
            }
        }
    }
    for v in all_v() {
        for w in all_v() {
            if v < w && all_h().all(|h| act(h, v) == act(h, w)) {
                return Some(format!("faithfulness {v} {w}"));
            }
        }
    }
    for v in all_v() {
        for h in all_h() {
            let found = all_v().find(|&w| all_h().all(|g| act(g, w) == add(act(g, v), h)));
            let ok = match (&raw.ins, found) {
                (_, None) => false,
                (Some(t), Some(_)) => all_h().all(|g| act(g, t[v][h]) == add(act(g, v), h)),
                (None, Some(_)) => true,
            };
            if !ok {
                return Some(format!("insertion {v} {h}"));
            }
        }
    }
    None
}

/// Re-checks the specific violation reported by the library validator.
pub fn confirm_violation(raw: &RawAlgebra, v: &Violation) -> bool {
    let add = |x: usize, y: usize| raw.h.add[x][y];
    let mul = |x: usize, y: usize| raw.v.mul[x][y];
    let act = |h: usize, v: usize| raw.act[h][v];
    match *v {
        Violation::Shape(_) | Violation::OutOfRange { .. } => direct_scan(raw).as_deref() == Some("shape"),
        Violation::HNotAssociative { a, b, c } => add(add(a, b), c) != add(a, add(b, c)),
        Violation::HNotCommutative { a, b } => add(a, b) != add(b, a),
        Violation::HZero { a } => add(raw.h.zero, a) != a || add(a, raw.h.zero) != a,
        Violation::VNotAssociative { a, b, c } => mul(mul(a, b), c) != mul(a, mul(b, c)),
        Violation::VOne { a } => mul(raw.v.one, a) != a || mul(a, raw.v.one) != a,
        Violation::ActionComposition { h, v1, v2 } => act(act(h, v1), v2) != act(h, mul(v1, v2)),
        Violation::ActionUnit { h } => act(h, raw.v.one) != h,
        Violation::Unfaithful { v1, v2 } => v1 != v2 && (0..raw.h.size).all(|h| act(h, v1) == act(h, v2)),
        Violation::MissingIns { v, h } => {
            !(0..raw.v.size).any(|w| (0..raw.h.size).all(|g| act(g, w) == add(act(g, v), h)))
        }
        Violation::InsMismatch { v, h, g } => {
            let w = raw.ins.as_ref().expect("ins table given")[v][h];
            act(g, w) != add(act(g, v), h)
        }
    }
}
