mod common;

use std::collections::{BTreeMap, BTreeSet};

use peerdx::asp::{
    compile_direct, compile_lav, is_hcf, lav_labels, parse_program, primed, shift_disjunctions, unfold_choice,
    SourceLabel,
};
use peerdx::lang::{parse_constraint, parse_system};
use peerdx::relational::{closer_or_equal, delta, restrict, Atom, Instance, RelationSymbol, Schema, SubschemaRef};
use peerdx::solver::answer_sets;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DOMAIN: [&str; 3] = ["a", "b", "c"];

fn schema() -> Schema {
    let mut s = Schema::new();
    s.insert("R".into(), RelationSymbol::new("R", 2, "P"));
    s.insert("S".into(), RelationSymbol::new("S", 1, "P"));
    s.insert("T".into(), RelationSymbol::new("T", 1, "Q"));
    s
}

fn candidate_atoms() -> Vec<Atom> {
    let mut out = Vec::new();
    for x in DOMAIN {
        for y in DOMAIN {
            out.push(Atom::new("R", [x, y]));
        }
        out.push(Atom::new("S", [x]));
        out.push(Atom::new("T", [x]));
    }
    out
}

fn instance() -> impl Strategy<Value = Instance> {
    let n = candidate_atoms().len();
    proptest::collection::vec(any::<bool>(), n).prop_map(|mask| {
        let atoms = candidate_atoms().into_iter().zip(mask).filter(|(_, m)| *m).map(|(a, _)| a);
        Instance::from_atoms(schema(), atoms).unwrap()
    })
}

proptest! {
    #[test]
    fn delta_is_symmetric(r1 in instance(), r2 in instance()) {
        let d12 = delta(&r1, &r2).unwrap();
        let d21 = delta(&r2, &r1).unwrap();
        prop_assert_eq!(&d12.inserted, &d21.deleted);
        prop_assert_eq!(&d12.deleted, &d21.inserted);
        prop_assert!(delta(&r1, &r1).unwrap().is_empty());
        prop_assert_eq!(d12.is_empty(), r1 == r2);
    }

    #[test]
    fn closeness_is_a_preorder(base in instance(), a in instance(), b in instance(), c in instance()) {
        prop_assert!(closer_or_equal(&base, &a, &a).unwrap());
        prop_assert!(closer_or_equal(&base, &base, &a).unwrap());
        if closer_or_equal(&base, &a, &b).unwrap() && closer_or_equal(&base, &b, &c).unwrap() {
            prop_assert!(closer_or_equal(&base, &a, &c).unwrap());
        }
    }

    #[test]
    fn restriction_is_idempotent(r in instance(), keep in proptest::sample::subsequence(vec!["R", "S", "T"], 0..=3)) {
        let s = SubschemaRef::new(keep.iter().copied());
        let once = restrict(&r, &s).unwrap();
        prop_assert_eq!(restrict(&once, &s).unwrap(), once.clone());
        prop_assert!(once.atoms().iter().all(|a| keep.contains(&a.relation.as_str()) && r.contains(a)));
        let all = SubschemaRef::new(["R", "S", "T"]);
        prop_assert_eq!(restrict(&r, &all).unwrap(), r);
    }
}

#[derive(Clone, Debug)]
enum Head {
    False,
    Eq(usize, usize),
    Atoms(Vec<(bool, usize)>),
}

fn constraint_text(body: &[(usize, usize, Option<usize>)], head: &Head) -> String {
    let vars = ["x", "y", "z"];
    let term = |i: usize| if i < 3 { vars[i].to_string() } else { format!("'{}'", DOMAIN[i - 3]) };
    let body_atoms: Vec<String> = body
        .iter()
        .map(|(r, a, b)| match (r % 2, b) {
            (0, Some(b)) => format!("R({},{})", term(*a), term(*b)),
            _ => format!("S({})", term(*a)),
        })
        .collect();
    let mut used: Vec<&str> = Vec::new();
    for (r, a, b) in body {
        let b = if r % 2 == 0 { *b } else { None };
        for i in [Some(*a), b].into_iter().flatten() {
            if i < 3 && !used.contains(&vars[i]) {
                used.push(vars[i]);
            }
        }
    }
    let first = used.first().copied().unwrap_or("x");
    let (head, exists) = match head {
        Head::False => ("false".to_string(), false),
        Head::Eq(a, b) => {
            let pick = |i: usize| used.get(i % used.len().max(1)).copied().unwrap_or("x");
            (format!("{} = {}", pick(*a), pick(*b)), false)
        }
        Head::Atoms(atoms) => {
            let parts: Vec<String> = atoms
                .iter()
                .map(|(binary, k)| {
                    if *binary {
                        format!("R({},w)", used.get(k % used.len().max(1)).copied().unwrap_or(first))
                    } else {
                        "T(w)".to_string()
                    }
                })
                .collect();
            (parts.join(" & "), true)
        }
    };
    let mut quant = String::new();
    if !used.is_empty() {
        quant.push_str(&format!("forall {} ", used.join(",")));
    }
    if exists {
        quant.push_str("exists w ");
    }
    format!("{quant}({} -> {head})", body_atoms.join(" & "))
}

fn head() -> impl Strategy<Value = Head> {
    prop_oneof![
        Just(Head::False),
        (0..3usize, 0..3usize).prop_map(|(a, b)| Head::Eq(a, b)),
        proptest::collection::vec((any::<bool>(), 0..3usize), 1..3).prop_map(Head::Atoms),
    ]
}

proptest! {
    #[test]
    fn constraints_round_trip(
        body in proptest::collection::vec((0..2usize, 0..6usize, proptest::option::of(0..6usize)), 1..3),
        head in head(),
    ) {
        let mut body = body;
    body[0].1 %= 3;
    let text = constraint_text(&body, &head);
        let c = parse_constraint(&text).unwrap();
        let again = parse_constraint(&c.to_string()).unwrap();
        prop_assert_eq!(again, c);
    }
}

fn ground_program(rules: &[(Vec<usize>, Vec<usize>, Vec<usize>)]) -> String {
    let mut out = String::new();
    for (head, pos, neg) in rules {
        let head: Vec<String> = head.iter().map(|h| format!("p{h}")).collect();
        let mut body: Vec<String> = pos.iter().map(|b| format!("p{b}")).collect();
        body.extend(neg.iter().map(|b| format!("not p{b}")));
        match (head.is_empty(), body.is_empty()) {
            (true, true) => continue,
            (true, false) => out.push_str(&format!(":- {}.\n", body.join(", "))),
            (false, true) => out.push_str(&format!("{}.\n", head.join(" v "))),
            (false, false) => out.push_str(&format!("{} :- {}.\n", head.join(" v "), body.join(", "))),
        }
    }
    out
}

fn rule() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
    (
        proptest::collection::vec(0..5usize, 0..3),
        proptest::collection::vec(0..5usize, 0..2),
        proptest::collection::vec(0..5usize, 0..2),
    )
}

proptest! {
    #[test]
    fn shifting_preserves_answer_sets(rules in proptest::collection::vec(rule(), 1..7)) {
        let p = parse_program(&ground_program(&rules)).unwrap();
        prop_assume!(is_hcf(&p));
        let shifted = shift_disjunctions(&p).unwrap();
        prop_assert!(shifted.rules.iter().all(|r| !r.is_disjunctive()));
        prop_assert_eq!(answer_sets(&shifted).unwrap(), answer_sets(&p).unwrap());
    }
}

fn random_systems(seed: u64, n: usize) -> Vec<peerdx::lang::System> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| parse_system(&common::random_system(&mut rng)).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn choices_are_functional_and_rules_safe(seed in any::<u64>()) {
        for s in random_systems(seed, 4) {
            for peer in s.peers().keys() {
                let p = compile_direct(&s, peer).unwrap();
                prop_assert!(p.check_safe().is_ok(), "{}", p);
                let widths: Vec<usize> = p.rules.iter().flat_map(|r| r.choices().map(|g| g.chosen.len())).collect();
                let u = unfold_choice(&p);
                let mut chosen: Vec<String> = Vec::new();
                for r in &u.rules {
                    if let [h] = r.head.as_slice() {
                        if h.predicate.starts_with("chosen") && !chosen.contains(&h.predicate) {
                            chosen.push(h.predicate.clone());
                        }
                    }
                }
                prop_assert_eq!(chosen.len(), widths.len());
                for m in answer_sets(&u).unwrap() {
                    for (pred, width) in chosen.iter().zip(&widths) {
                        let mut seen: BTreeMap<Vec<String>, usize> = BTreeMap::new();
                        for l in m.literals.iter().filter(|l| &l.predicate == pred) {
                            let key: Vec<String> = l.args[..l.args.len() - width].iter().map(|c| c.as_str().to_string()).collect();
                            *seen.entry(key).or_default() += 1;
                        }
                        prop_assert!(seen.values().all(|&n| n == 1), "{} in {}", pred, m);
                    }
                }
            }
        }
    }

    #[test]
    fn lav_labels_bound_solutions(seed in any::<u64>()) {
        let mut systems = random_systems(seed, 4);
        systems.push(common::fixture("fix_b.p2p"));
        for s in systems {
            for peer in s.peers().keys() {
                let Ok(p) = compile_lav(&s, peer) else { continue };
                let labels = lav_labels(&s, peer).unwrap();
                let global = s.global_instance();
                for m in answer_sets(&unfold_choice(&p)).unwrap() {
                    for (rel, label) in &labels {
                        let pred = primed(rel);
                        let source: BTreeSet<Vec<String>> = global
                            .tuples(rel)
                            .map(|a| a.args.iter().map(|c| c.as_str().to_string()).collect())
                            .collect();
                        let solution: BTreeSet<Vec<String>> = m
                            .literals
                            .iter()
                            .filter(|l| l.predicate == pred && !l.negated && l.args.last().map(|c| c.as_str()) == Some("tss"))
                            .map(|l| l.args[..l.args.len() - 1].iter().map(|c| c.as_str().to_string()).collect())
                            .collect();
                        match label {
                            SourceLabel::Closed => prop_assert!(solution.is_subset(&source)),
                            SourceLabel::Open => prop_assert!(solution.is_superset(&source)),
                            SourceLabel::Clopen => prop_assert_eq!(&solution, &source),
                        }
                    }
                }
            }
        }
    }
}
