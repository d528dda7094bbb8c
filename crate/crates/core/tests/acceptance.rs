//! Runs every acceptance criterion and prints one pass/fail line for each.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use forestcat_core::algebra::{syntactic_algebra, validate_algebra, verify_tm_division, RawAlgebra, Wreath};
use forestcat_core::catalog;
use forestcat_core::category::{
    verify_covering, CLAUSE_INJECTIVE_ARROWS, CLAUSE_INJECTIVE_HALF,
};
use forestcat_core::decide::{
    check_lt_identities_at_k, decide_lt, lt_wreath_recognizer, verify_lt_evidence, Budgets, CheckOutcome, Language,
    LtVerdict, NotLtReason, Strategy,
};
use forestcat_core::derived::{derived_category, dct_backward, dct_forward, pair_closure};
use forestcat_core::kdefinite::{oracle_k_lt, LtSpec, TypeUniverse};
use forestcat_core::terms::{enumerate_contexts, enumerate_forests, parse_forest_any, Context, Forest};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let ab = alphabet(&["a", "b"]);
    let forests = enumerate_forests(&ab, 4);
    let contexts = enumerate_contexts(&ab, 4);
    let small_f = enumerate_forests(&ab, 2);
    let small_c = enumerate_contexts(&ab, 2);
    let mut checked = 0usize;
    let empty = Forest::empty();
    for s in &forests {
        ensure(s.add(&empty) == *s && empty.add(s) == *s, format!("zero law at {s}"))?;
        ensure(s.apply(&Context::hole()) == *s, format!("hole acts trivially at {s}"))?;
        for l in ab.labels() {
            ensure(s.apply(&Context::letter(l.clone())) == s.adjoin(l.clone()), format!("letter at {s}"))?;
        }
        for t in &forests {
            ensure(s.add(t) == t.add(s), format!("commutativity at {s}, {t}"))?;
            checked += 1;
        }
        for t in &small_f {
            for u in &small_f {
                ensure(s.add(t).add(u) == s.add(&t.add(u)), format!("associativity at {s}, {t}, {u}"))?;
                checked += 1;
            }
        }
        for p in &contexts {
            for t in &small_f {
                ensure(s.apply(&p.insert(t)) == s.apply(p).add(t), format!("insertion at {s}, {p}, {t}"))?;
                checked += 1;
            }
            for q in &small_c {
                ensure(
                    s.apply(&p.compose(q)) == s.apply(p).apply(q),
                    format!("action at {s}, {p}, {q}"),
                )?;
                checked += 1;
            }
        }
    }
    for p in &contexts {
        ensure(p.compose(&Context::hole()) == *p && Context::hole().compose(p) == *p, format!("unit at {p}"))?;
        for q in &small_c {
            for r in &small_c {
                ensure(p.compose(q).compose(r) == p.compose(&q.compose(r)), format!("composition at {p}, {q}, {r}"))?;
                checked += 1;
            }
        }
    }
    let x = parse_forest_any("a(b(a)+a+b)+a(b)").map_err(|e| e.to_string())?;
    let y = parse_forest_any("a(b)+a(a+b(a)+b)").map_err(|e| e.to_string())?;
    ensure(x.canonical() == y.canonical(), "example equality")?;
    Ok(format!(
        "{} forests, {} contexts, {checked} law instances; example equality holds",
        forests.len(),
        contexts.len()
    ))
}

fn mutate(rng: &mut ChaCha8Rng, raw: &RawAlgebra) -> RawAlgebra {
    let mut m = raw.clone();
    let (n, v) = (m.h.size, m.v.size);
    match rng.gen_range(0..4) {
        0 => m.h.add[rng.gen_range(0..n)][rng.gen_range(0..n)] = rng.gen_range(0..n),
        1 => m.v.mul[rng.gen_range(0..v)][rng.gen_range(0..v)] = rng.gen_range(0..v),
        2 => m.act[rng.gen_range(0..n)][rng.gen_range(0..v)] = rng.gen_range(0..n),
        _ => {
            if let Some(t) = m.ins.as_mut() {
                t[rng.gen_range(0..v)][rng.gen_range(0..n)] = rng.gen_range(0..v);
            }
        }
    }
    m
}

fn criterion_2() -> Outcome {
    let bases = [
        flat(&[vec![0, 1], vec![1, 1]]).to_raw(),
        flat(&[vec![0, 1], vec![1, 0]]).to_raw(),
        flat(&[vec![0, 1, 2], vec![1, 2, 1], vec![2, 1, 2]]).to_raw(),
    ];
    let mut tables: Vec<RawAlgebra> = bases.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..50 {
        tables.push(mutate(&mut rng, &bases[i % bases.len()]));
    }
    let (mut accepted, mut rejected) = (0, 0);
    for (i, raw) in tables.iter().enumerate() {
        let scan = direct_scan(raw);
        match validate_algebra(raw) {
            Ok(_) => {
                ensure(scan.is_none(), format!("table {i} accepted but direct scan finds {scan:?}"))?;
                accepted += 1;
            }
            Err(v) => {
                ensure(scan.is_some(), format!("table {i} rejected ({v}) but direct scan finds nothing"))?;
                ensure(confirm_violation(raw, &v), format!("table {i}: reported {v} not confirmed"))?;
                rejected += 1;
            }
        }
    }
    ensure(accepted >= 3 && rejected > 0, "suite should contain both outcomes")?;
    Ok(format!("{} tables: {accepted} accepted, {rejected} rejected with confirmed violations", tables.len()))
}

fn criterion_3() -> Outcome {
    let r = catalog::contains_a_redundant(&["a", "b"]);
    let syn = syntactic_algebra(&r);
    let (h, v) = (syn.algebra.h_size(), syn.algebra.v_size());
    ensure((h, v) == (2, 2), format!("sizes {h}, {v}"))?;
    let forests = enumerate_forests(r.alphabet(), 6);
    for s in &forests {
        ensure(
            r.accepts(s).unwrap() == syn.recognizer.accepts(s).unwrap(),
            format!("languages differ on {s}"),
        )?;
    }
    let again = syntactic_algebra(&syn.recognizer);
    ensure(
        (again.algebra.h_size(), again.algebra.v_size()) == (h, v),
        "second application changed sizes",
    )?;
    Ok(format!("|H_L| = {h}, |V_L| = {v}; equal on {} forests; stable", forests.len()))
}

fn criteria_4_and_5() -> (Outcome, Outcome) {
    let suite = category_suite();
    let mut lines4 = Vec::new();
    let mut c4: Result<(), String> = Ok(());
    let mut c5: Result<(), String> = Ok(());
    let (mut ic, mut not_ic) = (0, 0);
    for (name, c) in &suite {
        let ids = c.check_identities().all_hold();
        let derived = c.check_derived_identities().all_hold();
        let bf5 = c.brute_force_global_ic(5);
        let witness = if ids { bf5.clone() } else { c.brute_force_global_ic(6) };
        if ids && !derived {
            c4 = c4.and(Err(format!("{name}: identities hold but derived identities fail")));
        }
        if derived && bf5.is_some() {
            c4 = c4.and(Err(format!("{name}: derived identities hold but brute force finds a witness")));
        }
        if !ids && witness.is_none() {
            c4 = c4.and(Err(format!("{name}: identity failure without a witness at bound 6")));
        }
        match c.canonical_flat_cover(2_000_000) {
            Ok(cover) => {
                let rep = verify_covering(c, &cover.algebra, &cover.covering);
                let injective_fail = rep.fails(CLAUSE_INJECTIVE_ARROWS) || rep.fails(CLAUSE_INJECTIVE_HALF);
                if witness.is_none() && !rep.ok() {
                    c5 = c5.and(Err(format!("{name}: no witness but cover fails {:?}", rep.counts)));
                }
                if witness.is_some() && !injective_fail {
                    c5 = c5.and(Err(format!("{name}: witness exists but cover is injective")));
                }
            }
            Err(e) => c5 = c5.and(Err(format!("{name}: cover not built: {e}"))),
        }
        if witness.is_none() {
            ic += 1;
        } else {
            not_ic += 1;
        }
        lines4.push(name.clone());
    }
    if suite.len() < 20 {
        c4 = c4.and(Err(format!("only {} categories", suite.len())));
    }
    let summary = format!("{} categories, {ic} globally IC, {not_ic} with witnesses", suite.len());
    (c4.map(|_| summary.clone()), c5.map(|_| summary))
}

fn criterion_6() -> Outcome {
    let names = ["a", "b"];
    let ab = alphabet(&names);
    let r = catalog::contains_a(&names);
    let syn = syntactic_algebra(&r);
    let mut u = TypeUniverse::new();
    let spec = LtSpec::parse("node(a)").map_err(|e| e.to_string())?;
    let lw = lt_wreath_recognizer(&mut u, &ab, 1, &spec, 1_000_000).map_err(|e| e.to_string())?;
    ensure(lw.pi_check(), "π∘δ ≠ β_1")?;
    let pa = pair_closure(syn.recognizer.morphism(), &lw.kdef.morphism, 1_000_000).map_err(|e| e.to_string())?;
    let d = derived_category(&pa).map_err(|e| e.to_string())?;
    let a1 = pa.alpha.algebra();
    let a2 = pa.beta.algebra();

    // (a) canonical cover, then the forward construction
    let cover = d.category.canonical_flat_cover(2_000_000).map_err(|e| e.to_string())?;
    let w = dct_forward(&pa, &d, &cover.algebra, &cover.covering).map_err(|e| e.to_string())?;
    verify_tm_division(a1, &Wreath::new(&cover.algebra, a2), &w).map_err(|e| e.to_string())?;

    // (b) covering from the wreath factorization
    let cov_b = dct_backward(&pa, &d, &lw.outer, &lw.delta, 1_000_000).map_err(|e| e.to_string())?;
    let rep = verify_covering(&d.category, &lw.outer, &cov_b);
    ensure(rep.ok(), format!("backward covering fails: {:?}", rep.counts))?;

    // (b) then (a)
    let w2 = dct_forward(&pa, &d, &lw.outer, &cov_b).map_err(|e| e.to_string())?;
    verify_tm_division(a1, &Wreath::new(&lw.outer, a2), &w2).map_err(|e| e.to_string())?;
    Ok(format!(
        "derived category {} objects, {} half-arrows, {} arrows; forward, backward and round trip verify",
        d.category.n_objects(),
        d.category.n_half_arrows(),
        d.category.n_arrows()
    ))
}

fn criterion_7() -> Outcome {
    let b = Budgets::default();
    let ab = ["a", "b"];
    let mut parts = Vec::new();
    let lt_cases = [
        ("contains-a", catalog::contains_a(&ab), None),
        ("a-has-b-child", catalog::a_has_b_child(), Some(3)),
        ("empty", catalog::empty_language(&ab), None),
        ("universal", catalog::universal_language(&ab), None),
    ];
    for (name, r, max_level) in lt_cases {
        let d = decide_lt(&r, &b).map_err(|e| format!("{name}: {e}"))?;
        match &d.verdict {
            LtVerdict::Lt { level, evidence } => {
                ensure(max_level.is_none_or(|m| *level <= m), format!("{name}: level {level}"))?;
                ensure(verify_lt_evidence(&r, evidence), format!("{name}: evidence fails"))?;
                parts.push(format!("{name} LT(level ≤ {level})"));
            }
            other => return Err(format!("{name}: {other:?}")),
        }
    }
    let parity = catalog::parity_a(&ab);
    let d = decide_lt(&parity, &b).map_err(|e| e.to_string())?;
    match &d.verdict {
        LtVerdict::NotLt(NotLtReason::Nonidempotent { h, sum, term }) => {
            let lang = Language::new(&parity);
            let alpha = lang.alpha();
            ensure(alpha.eval_forest(term).unwrap() == *h, "term value")?;
            ensure(alpha.eval_forest(&term.add(term)).unwrap() == *sum && sum != h, "sum value")?;
            parts.push("parity-a NotLT(nonidempotent)".into());
        }
        other => return Err(format!("parity: {other:?}")),
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Outcome {
    let b = Budgets::default();
    let mut u = TypeUniverse::new();
    let mut checked = Vec::new();
    for name in catalog::NAMES {
        let r = catalog::by_name(name).unwrap();
        let d = decide_lt(&r, &b).map_err(|e| e.to_string())?;
        if let LtVerdict::Lt { level, .. } = d.verdict {
            let w = oracle_k_lt(&mut u, &r, level, 6).map_err(|e| e.to_string())?;
            ensure(w.is_none(), format!("{name}: oracle witness {w:?} at level {level}"))?;
            checked.push(format!("{name}@{level}"));
        }
    }
    let parity = catalog::parity_a(&["a", "b"]);
    let w = oracle_k_lt(&mut u, &parity, 1, 4).map_err(|e| e.to_string())?;
    let (s, t) = w.ok_or("no parity witness")?;
    ensure(u.equiv_k(&s, &t, 1).unwrap(), "witness not ≡_1")?;
    ensure(parity.accepts(&s).unwrap() != parity.accepts(&t).unwrap(), "witness same acceptance")?;
    Ok(format!("no witness up to 6 nodes for {}; parity witness {s} / {t}", checked.join(" ")))
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let b = Budgets::default();
    for (name, names) in [("contains-a", &["a", "b"][..]), ("parity-a", &["a", "b"][..])] {
        let r = catalog::by_name(name).unwrap();
        for k in 0..=1 {
            let check = check_lt_identities_at_k(&r, k, Strategy::ExactClosure, &b).map_err(|e| e.to_string())?;
            let holds = match check.outcome {
                CheckOutcome::Holds => true,
                CheckOutcome::Violated { .. } => false,
                CheckOutcome::Inconclusive(x) => return Err(format!("{name} k={k}: {x}")),
            };
            let d = derived(&r, names, k);
            let cat = d.category.check_identities().all_hold();
            ensure(holds == cat, format!("{name} k={k}: identities {holds}, category {cat}"))?;
            parts.push(format!("{name}@{k}={holds}"));
        }
    }
    Ok(parts.join(" "))
}

fn criterion_10() -> Outcome {
    let ab = ["a", "b"];
    let a = ["a"];
    let cases = [
        ("contains-a/{a,b}", catalog::contains_a(&ab), 1),
        ("contains-a-redundant/{a,b}", catalog::contains_a_redundant(&ab), 1),
        ("a-has-b-child", catalog::a_has_b_child(), 1),
        ("universal/{a,b}", catalog::universal_language(&ab), 1),
        ("parity-a/{a,b}", catalog::parity_a(&ab), 1),
        ("contains-a/{a}", catalog::contains_a(&a), 3),
        ("empty/{a}", catalog::empty_language(&a), 3),
        ("unary 2-LT", unary_lt(), 3),
        ("even-a/{a}", catalog::even_a(&a), 3),
    ];
    let mut compared = 0;
    for (name, r, max_k) in cases {
        let mut lang = Language::new(&r);
        let idempotent = lang.algebra().is_h_idempotent();
        for k in 0..=max_k {
            let base = Budgets {
                term_bound: 3,
                random_terms: 24,
                ..Budgets::default()
            };
            let exact = lang
                .relation_rk(k, Strategy::ExactClosure, &base)
                .map_err(|e| format!("{name} k={k}: {e}"))?
                .keys();
            if idempotent {
                let sat = lang.relation_rk(k, Strategy::Saturation, &base).map_err(|e| e.to_string())?.keys();
                ensure(exact == sat, format!("{name} k={k}: exact and saturation differ"))?;
                compared += 1;
            }
            let s_exact = if k <= 1 {
                Some(lang.relation_sk(k, Strategy::ExactClosure, &base).map_err(|e| e.to_string())?.keys())
            } else {
                None
            };
            for seed in 0..10 {
                let b = Budgets { seed, ..base };
                let sampled = lang.relation_rk(k, Strategy::Sampled, &b).map_err(|e| e.to_string())?.keys();
                ensure(sampled.is_subset(&exact), format!("{name} k={k} seed {seed}: sampled R not a subset"))?;
                if let Some(s_exact) = &s_exact {
                    let s = lang.relation_sk(k, Strategy::Sampled, &b).map_err(|e| e.to_string())?.keys();
                    ensure(s.is_subset(s_exact), format!("{name} k={k} seed {seed}: sampled S not a subset"))?;
                }
            }
        }
    }
    Ok(format!("{compared} exact/saturation comparisons equal; sampled relations are subsets for 10 seeds"))
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    report(n, out)
}

fn report(n: usize, out: Outcome) -> bool {
    match out {
        Ok(detail) => {
            println!("criterion {n}: PASS ({detail})");
            true
        }
        Err(detail) => {
            println!("criterion {n}: FAIL ({detail})");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, criterion_1);
    ok &= run(2, criterion_2);
    ok &= run(3, criterion_3);
    let (c4, c5) = catch_unwind(criteria_4_and_5).unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    ok &= report(4, c4);
    ok &= report(5, c5);
    ok &= run(6, criterion_6);
    ok &= run(7, criterion_7);
    ok &= run(8, criterion_8);
    ok &= run(9, criterion_9);
    ok &= run(10, criterion_10);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
