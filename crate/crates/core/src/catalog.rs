//! A small catalog of recognizers used by tests, benchmarks and the CLI.

use std::collections::BTreeMap;

use crate::algebra::{FiniteForestAlgebra, Morphism, Recognizer};
use crate::kdefinite::{lt_recognizer, LtSpec, TypeUniverse};
use crate::terms::{Alphabet, Label};

pub fn flat_or() -> FiniteForestAlgebra {
    FiniteForestAlgebra::flat(&[vec![0, 1], vec![1, 1]], 0).expect("valid").0
}

pub fn flat_xor() -> FiniteForestAlgebra {
    FiniteForestAlgebra::flat(&[vec![0, 1], vec![1, 0]], 0).expect("valid").0
}

fn alphabet(names: &[&str]) -> Alphabet {
    Alphabet::new(names.iter().copied()).expect("valid names")
}

/// Letter `a` maps to `a_image`, every other letter to `other`.
fn recognizer(alg: FiniteForestAlgebra, names: &[&str], a_image: usize, other: usize, accept: &[usize]) -> Recognizer {
    let alphabet = alphabet(names);
    let letters: BTreeMap<Label, usize> = alphabet
        .labels()
        .iter()
        .map(|l| (l.clone(), if l.as_str() == "a" { a_image } else { other }))
        .collect();
    let m = Morphism::new(alg, alphabet, &letters).expect("letters in range");
    Recognizer::new(m, accept.iter().copied().collect()).expect("accept in range")
}

/// Forests with at least one `a`, on the flat OR algebra.
pub fn contains_a(names: &[&str]) -> Recognizer {
    recognizer(flat_or(), names, 1, 0, &[1])
}

/// Forests with an odd number of `a`, on the flat Z/2 algebra.
pub fn parity_a(names: &[&str]) -> Recognizer {
    recognizer(flat_xor(), names, 1, 0, &[1])
}

/// Forests with an even number of `a`.
pub fn even_a(names: &[&str]) -> Recognizer {
    recognizer(flat_xor(), names, 1, 0, &[0])
}

/// Contains-a on three states: none, odd, positive even.
pub fn contains_a_redundant(names: &[&str]) -> Recognizer {
    let t = vec![vec![0, 1, 2], vec![1, 2, 1], vec![2, 1, 2]];
    let alg = FiniteForestAlgebra::flat(&t, 0).expect("valid").0;
    recognizer(alg, names, 1, 0, &[1, 2])
}

pub fn empty_language(names: &[&str]) -> Recognizer {
    recognizer(flat_or(), names, 1, 1, &[])
}

pub fn universal_language(names: &[&str]) -> Recognizer {
    recognizer(flat_or(), names, 1, 1, &[0, 1])
}

/// Some node labeled `a` has a child labeled `b`, built from 2-types.
pub fn a_has_b_child() -> Recognizer {
    let mut u = TypeUniverse::new();
    let spec = LtSpec::parse("node(a[b])").expect("valid spec");
    lt_recognizer(&mut u, &alphabet(&["a", "b"]), 2, &spec, 100_000)
        .expect("small")
        .recognizer
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 7] = [
    "contains-a",
    "parity-a",
    "even-a",
    "contains-a-redundant",
    "empty",
    "universal",
    "a-has-b-child",
];

/// Catalog lookup over the alphabet `{a, b}`.
pub fn by_name(name: &str) -> Option<Recognizer> {
    let ab = ["a", "b"];
    Some(match name {
        "contains-a" => contains_a(&ab),
        "parity-a" => parity_a(&ab),
        "even-a" => even_a(&ab),
        "contains-a-redundant" => contains_a_redundant(&ab),
        "empty" => empty_language(&ab),
        "universal" => universal_language(&ab),
        "a-has-b-child" => a_has_b_child(),
        _ => return None,
    })
}
