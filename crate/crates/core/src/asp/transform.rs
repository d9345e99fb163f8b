//! Program transformations: choice unfolding and shifting.

use std::collections::{BTreeMap, BTreeSet};

use super::program::{BodyElem, Literal, Program, Rule};
use crate::error::{Error, Result};
use crate::lang::ast::{Builtin, CmpOp, Term};

fn fresh_pred(base: &str, used: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut n = 1;
    while used.contains(&name) {
        n += 1;
        name = format!("{base}_{n}");
    }
    used.insert(name.clone());
    name
}

fn fresh_var(base: &str, used: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut n = 1;
    while used.contains(&name) {
        n += 1;
        name = format!("{base}{n}");
    }
    used.insert(name.clone());
    name
}

/// Replaces every `choice((X̄),(W̄))` goal by a `chosen` atom defined
/// through a `diffchoice` predicate, one fresh pair per goal.
pub fn unfold_choice(p: &Program) -> Program {
    let mut used = p.predicates();
    let mut out = Program {
        facts: p.facts.clone(),
        rules: Vec::new(),
        layers: p.layers.as_ref().map(|_| Vec::new()),
        outputs: p.outputs.clone(),
        annotated: p.annotated,
        minimality: p.minimality.clone(),
        warnings: p.warnings.clone(),
    };
    for (i, r) in p.rules.iter().enumerate() {
        let layer = p.layer_of(i);
        if r.choices().next().is_none() {
            out.push_in(r.clone(), layer);
            continue;
        }
        let plain: Vec<BodyElem> = r
            .body
            .iter()
            .filter(|e| !matches!(e, BodyElem::Choice(_)))
            .cloned()
            .collect();
        let mut body = plain.clone();
        let mut defs = Vec::new();
        for g in r.choices() {
            let chosen = fresh_pred("chosen", &mut used);
            let diff = fresh_pred("diffchoice", &mut used);
            let args: Vec<Term> = g.keys.iter().chain(&g.chosen).map(|v| Term::var(v.clone())).collect();
            let chosen_lit = Literal::pos(chosen.clone(), args.clone());
            let diff_lit = Literal::pos(diff.clone(), args.clone());

            let mut def = plain.clone();
            def.push(BodyElem::Naf(diff_lit.clone()));
            defs.push(Rule::new(vec![chosen_lit.clone()], def));

            let guard: Vec<BodyElem> = r
                .positive()
                .filter(|l| l.vars().any(|v| g.chosen.iter().any(|c| c == v)))
                .map(|l| BodyElem::Pos(l.clone()))
                .collect();
            let mut vars: BTreeSet<String> = r.body.iter().flat_map(body_vars).collect();
            vars.extend(r.head.iter().flat_map(|l| l.vars().map(str::to_string)));
            let others: Vec<String> = g.chosen.iter().map(|_| fresh_var("U", &mut vars)).collect();
            let other_args: Vec<Term> = g
                .keys
                .iter()
                .chain(&others)
                .map(|v| Term::var(v.clone()))
                .collect();
            for (w, u) in g.chosen.iter().zip(&others) {
                let mut b = vec![BodyElem::Pos(Literal::pos(chosen.clone(), other_args.clone()))];
                b.extend(guard.iter().cloned());
                b.push(BodyElem::Cmp(Builtin::new(CmpOp::Neq, Term::var(u.clone()), Term::var(w.clone()))));
                defs.push(Rule::new(vec![diff_lit.clone()], b));
            }
            body.push(BodyElem::Pos(chosen_lit));
        }
        out.push_in(Rule::new(r.head.clone(), body), layer);
        for d in defs {
            out.push_in(d, layer);
        }
    }
    out
}

fn body_vars(e: &BodyElem) -> Vec<String> {
    match e {
        BodyElem::Pos(l) | BodyElem::Naf(l) => l.vars().map(str::to_string).collect(),
        BodyElem::Cmp(b) => [&b.left, &b.right]
            .into_iter()
            .filter_map(|t| t.as_var().map(str::to_string))
            .collect(),
        BodyElem::Choice(g) => g.keys.iter().chain(&g.chosen).cloned().collect(),
    }
}

type Node = (String, bool);

fn node(l: &Literal) -> Node {
    (l.predicate.clone(), l.negated)
}

fn render(n: &Node) -> String {
    if n.1 {
        format!("-{}", n.0)
    } else {
        n.0.clone()
    }
}

/// Two head literals of one rule whose predicates lie on a common cycle of
/// the positive dependency graph, if any.
pub fn head_cycle(p: &Program) -> Option<(String, String)> {
    let mut edges: BTreeMap<Node, BTreeSet<Node>> = BTreeMap::new();
    for r in &p.rules {
        for h in &r.head {
            edges.entry(node(h)).or_default().extend(r.positive().map(node));
        }
    }
    let reaches = |from: &Node, to: &Node| -> bool {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&Node> = edges.get(from).into_iter().flatten().collect();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(edges.get(n).into_iter().flatten());
            }
        }
        false
    };
    for r in p.rules.iter().filter(|r| r.is_disjunctive()) {
        for (i, a) in r.head.iter().enumerate() {
            for b in &r.head[i + 1..] {
                let (a, b) = (node(a), node(b));
                if reaches(&a, &b) && reaches(&b, &a) {
                    return Some((render(&a), render(&b)));
                }
            }
        }
    }
    None
}

pub fn is_hcf(p: &Program) -> bool {
    head_cycle(p).is_none()
}

/// Replaces each disjunctive rule by one normal rule per head literal, with
/// the other head literals negated by default in the body.
pub fn shift_disjunctions(p: &Program) -> Result<Program> {
    if let Some((a, b)) = head_cycle(p) {
        return Err(Error::NotHcf(format!("{a} and {b} share a positive cycle")));
    }
    let mut out = Program {
        rules: Vec::new(),
        layers: p.layers.as_ref().map(|_| Vec::new()),
        ..p.clone()
    };
    for (i, r) in p.rules.iter().enumerate() {
        let layer = p.layer_of(i);
        if !r.is_disjunctive() {
            out.push_in(r.clone(), layer);
            continue;
        }
        let mut heads: Vec<&Literal> = Vec::new();
        for h in &r.head {
            if !heads.contains(&h) {
                heads.push(h);
            }
        }
        for h in &heads {
            let mut body = r.body.clone();
            body.extend(heads.iter().filter(|o| o != &h).map(|o| BodyElem::Naf((*o).clone())));
            out.push_in(Rule::new(vec![(*h).clone()], body), layer);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::parse_program;

    #[test]
    fn unfold_single_goal() {
        let p = parse_program("p(X,W) :- q(X), s(X,W), choice((X),W).").unwrap();
        let u = unfold_choice(&p);
        let text: Vec<String> = u.rules.iter().map(ToString::to_string).collect();
        assert_eq!(
            text,
            [
                "p(X,W) :- q(X), s(X,W), chosen(X,W).",
                "chosen(X,W) :- q(X), s(X,W), not diffchoice(X,W).",
                "diffchoice(X,W) :- chosen(X,U), s(X,W), U != W.",
            ]
        );
    }

    #[test]
    fn detects_head_cycles() {
        let p = parse_program("a v b :- c. a :- b. b :- a. c.").unwrap();
        assert!(!is_hcf(&p));
        assert!(matches!(shift_disjunctions(&p), Err(Error::NotHcf(_))));
        let q = parse_program("a v b :- c. c.").unwrap();
        let s = shift_disjunctions(&q).unwrap();
        let text: Vec<String> = s.rules.iter().map(ToString::to_string).collect();
        assert_eq!(text, ["a :- c, not b.", "b :- c, not a."]);
    }
}
