mod common;

use std::collections::BTreeSet;

use progfilter::io::{parse_inputs, serialize_inputs};
use progfilter::metrics::{
    depth_profile, precision_change, precision_constraint_check, PrefixState,
};
use progfilter::model::{
    homomorphism_map, omega_closed, omega_recursive, psi, PsiMode, Stage, StageChain,
};
use progfilter::taxonomy::{pipeline_leq, LabelSet, RawEdge};
use progfilter::{NormalizedConfusionMatrix, Taxonomy, NEUTRAL};
use proptest::prelude::*;

fn gamma() -> impl Strategy<Value = NormalizedConfusionMatrix> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(fp, tp)| NormalizedConfusionMatrix::from_rates(fp, tp))
}

fn chain(max: usize) -> impl Strategy<Value = StageChain> {
    prop::collection::vec((0.0..=1.0f64, gamma()), 0..=max).prop_map(|v| {
        StageChain::new(v.into_iter().map(|(f, gamma)| Stage { f, gamma }).collect()).unwrap()
    })
}

/// Random DAG on `N0 … N{n-1}`; node `i > 0` picks a non-empty set of
/// parents among `0..i`, so `N0` is the unique root.
fn dag() -> impl Strategy<Value = (Vec<String>, Vec<RawEdge>)> {
    (1usize..=7)
        .prop_flat_map(|n| {
            let masks: Vec<_> = (1..n)
                .map(|i| (1u32..(1 << i), prop::collection::vec(0.05..=1.0f64, i)))
                .collect();
            (Just(n), masks)
        })
        .prop_map(|(n, masks)| {
            let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
            let mut edges = Vec::new();
            for (k, (mask, fs)) in masks.into_iter().enumerate() {
                let child = k + 1;
                for p in 0..child {
                    if mask & (1 << p) != 0 {
                        edges.push(RawEdge::new(&names[child], &names[p], Some(fs[p])));
                    }
                }
            }
            (names, edges)
        })
}

fn taxonomy() -> impl Strategy<Value = Taxonomy> {
    dag().prop_map(|(names, edges)| Taxonomy::validate(&names, &edges, Some("N0")).unwrap())
}

fn close(a: &NormalizedConfusionMatrix, b: &NormalizedConfusionMatrix, tol: f64) -> bool {
    a.as_mat().max_abs_diff(&b.as_mat()) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn oplus_is_a_monoid(a in gamma(), b in gamma(), c in gamma()) {
        let ab = a.oplus(&b);
        prop_assert!(ab.row_sum_error() <= 1e-12);
        prop_assert!(close(&ab.oplus(&c), &a.oplus(&b.oplus(&c)), 1e-12));
        prop_assert!(close(&NEUTRAL.oplus(&a), &a, 0.0));
        prop_assert!(close(&a.oplus(&NEUTRAL), &a, 0.0));
    }

    #[test]
    fn closed_form_matches_recurrence(c in chain(64)) {
        let gap = omega_closed(&c).as_mat().max_abs_diff(&omega_recursive(&c).as_mat());
        prop_assert!(gap <= 1e-9, "gap {gap}");
        prop_assert!((omega_recursive(&c).total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn psi_is_a_homomorphism(s in prop::collection::vec(gamma(), 0..=12), cut in any::<prop::sample::Index>()) {
        let cut = cut.index(s.len() + 1);
        let (l, r) = s.split_at(cut);
        for mode in [PsiMode::Recursive, PsiMode::Closed] {
            prop_assert!(close(&psi(&s, mode), &psi(l, mode).oplus(&psi(r, mode)), 1e-12));
        }
        prop_assert!(close(&homomorphism_map(&s), &psi(&s, PsiMode::Closed), 1e-12));
    }

    #[test]
    fn recall_never_increases(c in chain(12)) {
        let profile = depth_profile(&c);
        prop_assert!(profile.recall_non_increasing);
        for e in &profile.entries {
            let product: f64 = (0..=e.k).map(|j| c.gamma(j).tp()).product();
            if let Some(r) = e.metrics.recall {
                prop_assert!((r - product).abs() <= 1e-12);
            }
            prop_assert!((e.metrics.accuracy - e.omega.as_mat().trace()).abs() <= 1e-15);
        }
    }

    #[test]
    fn precision_verdict_matches_direct_change(c in chain(6), f in 0.0..=1.0f64, g in gamma()) {
        let state = PrefixState::at(&c, c.depth());
        if let Ok(check) = precision_constraint_check(&state, f, &g) {
            let mut stages = c.stages().to_vec();
            stages.push(Stage { f, gamma: g });
            let after = omega_recursive(&StageChain::new(stages).unwrap());
            if let Some(direct) = precision_change(&omega_recursive(&c), &after) {
                prop_assert_eq!(direct, check.verdict);
            }
        }
    }

    #[test]
    fn pipelines_are_prefix_closed_and_ordered(t in taxonomy()) {
        let all = t.enumerate_pipelines(false);
        let paths: BTreeSet<String> = all.iter().map(|p| p.path()).collect();
        prop_assert_eq!(paths.len(), all.len());
        for p in &all {
            for k in 0..=p.depth() {
                let prefix = p.prefix(k);
                prop_assert!(paths.contains(&prefix.path()));
                prop_assert!(pipeline_leq(&prefix, p));
            }
            prop_assert!(p.leq(p));
        }
        for a in &all {
            for b in &all {
                if a.leq(b) && b.leq(a) {
                    prop_assert_eq!(a.path(), b.path());
                }
                for c in &all {
                    if a.leq(b) && b.leq(c) {
                        prop_assert!(a.leq(c));
                    }
                }
            }
        }
        for p in t.enumerate_pipelines(true) {
            prop_assert!(t.is_leaf(p.nodes().last().unwrap().as_str()).unwrap());
        }
    }

    #[test]
    fn ancestor_closed_label_sets_are_consistent(t in taxonomy(), pick in any::<prop::sample::Index>()) {
        let cats = t.categories();
        let label = &cats[pick.index(cats.len())];
        let mut set: BTreeSet<_> = t.relative_sets(label.as_str()).unwrap().ancestors;
        set.insert(label.clone());
        prop_assert!(t.check_label_consistency(&LabelSet(set.clone())).unwrap().is_consistent());
        if label != t.root() {
            set.remove(t.root());
            let c = t.check_label_consistency(&LabelSet(set)).unwrap();
            prop_assert!(!c.is_consistent());
            prop_assert!(c.missing().contains(t.root()));
        }
    }

    #[test]
    fn parse_serialize_parse_is_idempotent(
        (names, edges) in dag(),
        gammas in prop::collection::vec((gamma(), -1e-10..1e-10f64), 7),
    ) {
        let tax = serde_json::json!({
            "root": "N0",
            "categories": names,
            "edges": edges,
        });
        let classifiers: serde_json::Map<String, serde_json::Value> = names[1..]
            .iter()
            .zip(&gammas)
            .map(|(n, (g, eps))| {
                (n.clone(), serde_json::json!({"tn": g.tn(), "fp": (g.fp() + eps).clamp(0.0, 1.0), "fn": g.fn_(), "tp": g.tp()}))
            })
            .collect();
        let prof = serde_json::json!({ "classifiers": classifiers });
        let first = parse_inputs(&tax.to_string(), &prof.to_string()).unwrap();
        let (t1, p1) = serialize_inputs(&first);
        let second = parse_inputs(&t1, &p1).unwrap();
        prop_assert_eq!(&first.taxonomy, &second.taxonomy);
        prop_assert_eq!(&first.profiles, &second.profiles);
        prop_assert!(second.renormalized.is_empty());
        let (t2, p2) = serialize_inputs(&second);
        prop_assert_eq!(t1, t2);
        prop_assert_eq!(p1, p2);
    }
}
