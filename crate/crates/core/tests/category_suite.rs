mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use forestcat_core::category::{validate_category, ContextDiagram, Diagram, ForestCategory, ForestDiagram, ParseOrder};

fn random_forest(c: &ForestCategory, rng: &mut ChaCha8Rng, target: usize, depth: usize) -> Option<Vec<Diagram>> {
    if target == c.obj_zero() && rng.gen_bool(0.3) {
        return Some(Vec::new());
    }
    for _ in 0..24 {
        let n = rng.gen_range(1..=3);
        let mut kids = Vec::new();
        for _ in 0..n {
            let t = if depth > 0 && rng.gen_bool(0.6) {
                random_tree(c, rng, depth - 1)
            } else {
                Some(Diagram::Leaf(rng.gen_range(0..c.n_half_arrows())))
            };
            kids.extend(t);
        }
        if c.rootsum(&ForestDiagram(kids.clone())).ok() == Some(target) {
            return Some(kids);
        }
    }
    (target == c.obj_zero()).then(Vec::new)
}

fn random_tree(c: &ForestCategory, rng: &mut ChaCha8Rng, depth: usize) -> Option<Diagram> {
    let u = rng.gen_range(0..c.n_arrows());
    random_forest(c, rng, c.start(u), depth).map(|kids| Diagram::Node(u, kids))
}

fn random_context(c: &ForestCategory, rng: &mut ChaCha8Rng, depth: usize) -> Option<(ContextDiagram, usize)> {
    let hole = rng.gen_range(0..c.n_objects());
    let hole_siblings = ForestDiagram(random_forest(c, rng, c.obj_zero(), depth).unwrap_or_default());
    let mut y = c.add_obj(hole, c.rootsum(&hole_siblings).ok()?);
    let mut frames = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        let candidates: Vec<usize> = (0..c.n_arrows()).filter(|&u| c.start(u) == y).collect();
        if candidates.is_empty() {
            break;
        }
        let u = candidates[rng.gen_range(0..candidates.len())];
        let sibs = ForestDiagram(random_forest(c, rng, c.obj_zero(), depth).unwrap_or_default());
        y = c.add_obj(c.end(u), c.rootsum(&sibs).ok()?);
        frames.push((u, sibs));
    }
    Some((ContextDiagram { hole, hole_siblings, frames }, hole))
}

fn plug(d: &ContextDiagram, s: &[Diagram]) -> ForestDiagram {
    let mut inner: Vec<Diagram> = s.iter().chain(&d.hole_siblings.0).cloned().collect();
    for (u, sibs) in &d.frames {
        inner = std::iter::once(Diagram::Node(*u, inner)).chain(sibs.0.iter().cloned()).collect();
    }
    ForestDiagram(inner)
}

#[test]
fn suite_categories_round_trip_through_raw_tables() {
    for (name, c) in category_suite() {
        let again = validate_category(&c.to_raw()).unwrap_or_else(|v| panic!("{name}: {v:?}"));
        assert_eq!(again.to_raw(), c.to_raw(), "{name}");
    }
}

#[test]
fn parse_orders_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, c) in category_suite() {
        let mut seen = 0;
        for _ in 0..200 {
            let Some(t) = random_tree(&c, &mut rng, 3) else { continue };
            let d = ForestDiagram(vec![t]);
            let direct = c.eval_diagram(&d).unwrap();
            for order in [ParseOrder::PivotFirst, ParseOrder::PivotLast] {
                assert_eq!(c.eval_with(&d, order).unwrap(), direct, "{name}: {d}");
            }
            assert_eq!(c.harr_end(direct), c.rootsum(&d).unwrap(), "{name}: {d}");
            seen += 1;
        }
        assert!(seen > 0, "{name}");
    }
}

#[test]
fn context_diagrams_act_by_plugging() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, c) in category_suite() {
        for _ in 0..200 {
            let Some((ctx, hole)) = random_context(&c, &mut rng, 2) else { continue };
            let Some(s) = random_forest(&c, &mut rng, hole, 2) else { continue };
            let e = c.eval_context_diagram(&ctx).unwrap();
            let h = c.eval_diagram(&ForestDiagram(s.clone())).unwrap();
            let plugged = plug(&ctx, &s);
            assert_eq!(c.act(h, e), Some(c.eval_diagram(&plugged).unwrap()), "{name}: {ctx} at {plugged}");
            let mut support = c.context_support(&ctx);
            support.union_with(&c.support(&ForestDiagram(s)));
            assert_eq!(support, c.support(&plugged), "{name}");
        }
    }
}

#[test]
fn category_witnesses_are_genuine() {
    for (name, c) in category_suite() {
        if let Some(w) = c.brute_force_global_ic(5) {
            assert!(!c.check_derived_identities().all_hold(), "{name}: {w:?}");
        }
    }
}

/// Every forest diagram with exactly `n` nodes, without any deduplication,
/// as a list of trees in non-decreasing tree index order.
fn all_diagrams(c: &ForestCategory, max: usize) -> Vec<Vec<ForestDiagram>> {
    let mut trees: Vec<Vec<Diagram>> = vec![Vec::new(); max + 1];
    let mut forests: Vec<Vec<ForestDiagram>> = vec![Vec::new(); max + 1];
    forests[0].push(ForestDiagram::default());
    for n in 1..=max {
        if n == 1 {
            trees[1].extend((0..c.n_half_arrows()).map(Diagram::Leaf));
        }
        for f in &forests[n - 1] {
            let x = c.rootsum(f).unwrap();
            for u in (0..c.n_arrows()).filter(|&u| c.start(u) == x) {
                trees[n].push(Diagram::Node(u, f.0.clone()));
            }
        }
        let mut out = Vec::new();
        let flat: Vec<(usize, usize)> = (1..=n).flat_map(|s| (0..trees[s].len()).map(move |i| (s, i))).collect();
        fn go(
            trees: &[Vec<Diagram>],
            flat: &[(usize, usize)],
            from: usize,
            left: usize,
            acc: &mut Vec<Diagram>,
            out: &mut Vec<ForestDiagram>,
        ) {
            if left == 0 {
                out.push(ForestDiagram(acc.clone()));
                return;
            }
            for (pos, &(s, i)) in flat.iter().enumerate().skip(from) {
                if s <= left {
                    acc.push(trees[s][i].clone());
                    go(trees, flat, pos, left - s, acc, out);
                    acc.pop();
                }
            }
        }
        go(&trees, &flat, 0, n, &mut Vec::new(), &mut out);
        forests[n] = out;
    }
    forests
}

#[test]
fn brute_force_matches_direct_enumeration() {
    let bound = 4;
    let mut compared = 0;
    for (name, c) in category_suite() {
        if c.n_arrows() + c.n_half_arrows() > 24 {
            continue;
        }
        let mut seen: std::collections::HashMap<(Vec<usize>, usize), usize> = std::collections::HashMap::new();
        let mut direct = false;
        for d in all_diagrams(&c, bound).into_iter().flatten() {
            let key = (c.support(&d).ones().collect(), c.rootsum(&d).unwrap());
            let v = c.eval_diagram(&d).unwrap();
            if *seen.entry(key).or_insert(v) != v {
                direct = true;
            }
        }
        let dp = c.brute_force_global_ic(bound);
        assert_eq!(dp.is_some(), direct, "{name}");
        if let Some(w) = dp {
            assert_eq!(c.support(&w.first), c.support(&w.second), "{name}");
            assert_eq!(c.rootsum(&w.first), c.rootsum(&w.second), "{name}");
            assert_ne!(c.eval_diagram(&w.first), c.eval_diagram(&w.second), "{name}");
        }
        compared += 1;
    }
    assert!(compared >= 10, "{compared}");
}
