//! Annotated three-layer repair programs.
//!
//! Every relation `R` of the peer's extended schema gets a virtual version
//! `rp(x̄, a)` whose last argument is an annotation: `td` for imported
//! tuples, `ta` and `fa` for insertions and deletions, `tss` for the final
//! contents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::direct::{check_supported, generic_vars, predicate_of, primed, Fresh, VarMap, DOM};
use super::program::{BodyElem, ChoiceGoal, Layer, Literal, Minimality, OutputMap, Program, Rule};
use crate::error::{Error, Result};
use crate::lang::ast::{AtomPattern, Constraint, Term};
use crate::lang::System;
use crate::relational::{active_domain, Atom, PeerId};
use crate::trust::neighborhood;

pub const TD: &str = "td";
pub const TA: &str = "ta";
pub const FA: &str = "fa";
pub const TSS: &str = "tss";

/// How a solution relation relates to its material source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceLabel {
    /// Contained in the source: repaired by deletions only.
    Closed,
    /// Contains the source: repaired by insertions only.
    Open,
    /// Equal to the source.
    Clopen,
}

impl fmt::Display for SourceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceLabel::Closed => "closed",
            SourceLabel::Open => "open",
            SourceLabel::Clopen => "clopen",
        })
    }
}

struct LavPlan<'a> {
    constraints: Vec<&'a Constraint>,
    flexible: BTreeSet<String>,
    labels: BTreeMap<String, SourceLabel>,
}

fn plan<'a>(system: &'a System, peer: &PeerId, n: &'a crate::trust::Neighborhood) -> Result<LavPlan<'a>> {
    check_supported(n.less_decs.iter().chain(&n.same_decs))?;
    check_supported(&system.peer(peer)?.ics)?;
    if !n.less_decs.is_empty() && !n.same_decs.is_empty() {
        return Err(Error::Unsupported(
            "annotated programs take exchange constraints of a single trust level".into(),
        ));
    }
    let mut flexible = system.peer(peer)?.relation_names();
    if !n.same_decs.is_empty() {
        flexible.extend(
            system
                .schema()
                .values()
                .filter(|r| n.same.contains(&r.owner))
                .map(|r| r.name.clone()),
        );
    }
    let constraints: Vec<&Constraint> = n.less_decs.iter().chain(&n.same_decs).collect();
    let mut deleted = BTreeSet::new();
    let mut inserted = BTreeSet::new();
    let mut read = BTreeSet::new();
    for c in &constraints {
        for a in c.body_atoms() {
            read.insert(a.relation.as_str());
            if flexible.contains(&a.relation) {
                deleted.insert(a.relation.as_str());
            }
        }
        for a in c.head_atoms() {
            if flexible.contains(&a.relation) {
                inserted.insert(a.relation.as_str());
            }
        }
    }
    if let Some(r) = deleted.intersection(&inserted).next() {
        return Err(Error::Unsupported(format!(
            "relation {r} would need both deletions and insertions"
        )));
    }
    if let Some(r) = read.intersection(&inserted).next() {
        return Err(Error::Unsupported(format!(
            "insertions into {r} feed another constraint"
        )));
    }
    let labels = n
        .extended_schema
        .iter()
        .map(|r| {
            let l = if deleted.contains(r.as_str()) {
                SourceLabel::Closed
            } else if inserted.contains(r.as_str()) {
                SourceLabel::Open
            } else {
                SourceLabel::Clopen
            };
            (r.clone(), l)
        })
        .collect();
    Ok(LavPlan {
        constraints,
        flexible,
        labels,
    })
}

/// Labels of the relations in `peer`'s extended schema.
pub fn lav_labels(system: &System, peer: &PeerId) -> Result<BTreeMap<String, SourceLabel>> {
    let n = neighborhood(system, peer)?;
    Ok(plan(system, peer, &n)?.labels)
}

fn ann(rel: &str, mut args: Vec<Term>, a: &str) -> Literal {
    args.push(Term::constant(a));
    Literal::pos(primed(rel), args)
}

/// The annotated program for `peer`: a legal-instance layer followed by a
/// repair layer.
pub fn compile_lav(system: &System, peer: &PeerId) -> Result<Program> {
    let n = neighborhood(system, peer)?;
    let lp = plan(system, peer, &n)?;
    let mut prog = Program {
        layers: Some(Vec::new()),
        annotated: true,
        minimality: Minimality::Final,
        warnings: n.warnings.clone(),
        ..Program::default()
    };
    let legal = Some(Layer::LegalInstance);
    let repair = Some(Layer::Repair);
    let arity = |r: &str| system.relation(r).map_or(0, |s| s.arity);

    for rel in lp.labels.keys() {
        let v = generic_vars(arity(rel));
        let src = Literal::pos(predicate_of(rel), v.clone());
        prog.push_in(Rule::new(vec![ann(rel, v, TD)], vec![BodyElem::Pos(src)]), legal);
    }
    for (rel, label) in &lp.labels {
        if *label != SourceLabel::Open {
            let v = generic_vars(arity(rel));
            prog.push_in(
                Rule::denial(vec![
                    BodyElem::Pos(ann(rel, v.clone(), TD)),
                    BodyElem::Naf(Literal::pos(predicate_of(rel), v)),
                ]),
                legal,
            );
        }
    }
    for rel in lp.labels.keys() {
        let v = generic_vars(arity(rel));
        let tss = ann(rel, v.clone(), TSS);
        prog.push_in(
            Rule::new(
                vec![tss.clone()],
                vec![BodyElem::Pos(ann(rel, v.clone(), TD)), BodyElem::Naf(ann(rel, v.clone(), FA))],
            ),
            repair,
        );
        prog.push_in(Rule::new(vec![tss], vec![BodyElem::Pos(ann(rel, v.clone(), TA))]), repair);
        prog.push_in(
            Rule::denial(vec![BodyElem::Pos(ann(rel, v.clone(), TA)), BodyElem::Pos(ann(rel, v, FA))]),
            repair,
        );
    }

    let mut fresh = Fresh::default();
    let mut dom = false;
    for c in &lp.constraints {
        let rules = repair_rules(c, &lp, &mut fresh, &mut dom);
        for r in rules {
            prog.push_in(r, repair);
        }
    }
    for ic in &system.peer(peer)?.ics {
        let vm = VarMap::new(ic);
        let mut body: Vec<BodyElem> = ic
            .body_atoms()
            .map(|a| BodyElem::Pos(ann(&a.relation, vm.terms(a), TSS)))
            .collect();
        body.extend(ic.body_builtins().map(|b| BodyElem::Cmp(vm.builtin(b))));
        body.extend(ic.head_builtins().map(|b| BodyElem::Cmp(vm.builtin(&b.negated()))));
        prog.push_in(Rule::denial(body), repair);
    }

    let global = system.global_instance();
    for a in global.atoms() {
        if lp.labels.contains_key(&a.relation) {
            prog.facts.insert(Atom::new(predicate_of(&a.relation), a.args.iter().cloned()));
        }
    }
    if dom {
        for c in active_domain([&global], system.constraint_constants()) {
            prog.facts.insert(Atom::new(DOM, [c]));
        }
    }
    for rel in lp.labels.keys() {
        prog.outputs.insert(
            primed(rel),
            OutputMap {
                predicate: primed(rel),
                relation: rel.clone(),
            },
        );
    }
    Ok(prog)
}

fn repair_rules(c: &Constraint, lp: &LavPlan<'_>, fresh: &mut Fresh, dom: &mut bool) -> Vec<Rule> {
    let vm = VarMap::new(c);
    let flexible = |a: &&AtomPattern| lp.flexible.contains(&a.relation);
    let td = |a: &AtomPattern| BodyElem::Pos(ann(&a.relation, vm.terms(a), TD));
    let mut body: Vec<BodyElem> = c.body_atoms().map(td).collect();
    body.extend(c.body_builtins().map(|b| BodyElem::Cmp(vm.builtin(b))));
    let dels: Vec<Literal> = c
        .body_atoms()
        .filter(flexible)
        .map(|a| ann(&a.relation, vm.terms(a), FA))
        .collect();
    let flex_head: Vec<&AtomPattern> = c.head_atoms().filter(flexible).collect();
    let guard: Vec<&AtomPattern> = c.head_atoms().filter(|a| !flexible(a)).collect();
    let mut out = Vec::new();

    if c.head_atoms().next().is_none() {
        body.extend(c.head_builtins().map(|b| BodyElem::Cmp(vm.builtin(&b.negated()))));
        out.push(Rule::new(dels, body));
        return out;
    }
    if c.existential.is_empty() && dels.is_empty() && guard.is_empty() {
        for a in &flex_head {
            let mut b = body.clone();
            b.push(BodyElem::Naf(ann(&a.relation, vm.terms(a), TD)));
            out.push(Rule::new(vec![ann(&a.relation, vm.terms(a), TA)], b));
        }
        return out;
    }

    let keys: Vec<String> = c.head_universal_vars().iter().map(|v| vm.var(v)).collect();
    let key_terms: Vec<Term> = keys.iter().map(|k| Term::var(k.clone())).collect();
    let aux_n = fresh.aux();
    let mut readers = Vec::new();
    for a in c.head_atoms() {
        readers.push(td(a));
        if dels.iter().any(|d| d.predicate == primed(&a.relation)) {
            readers.push(BodyElem::Naf(ann(&a.relation, vm.terms(a), FA)));
        }
    }
    let aux_rule = Rule::new(vec![Literal::pos(aux_n.clone(), key_terms.clone())], readers);
    let mut blocked = body;
    blocked.push(BodyElem::Naf(Literal::pos(aux_n, key_terms)));
    if flex_head.is_empty() {
        out.push(Rule::new(dels, blocked));
        out.push(aux_rule);
        return out;
    }
    if !guard.is_empty() {
        let mut gvars: Vec<String> = Vec::new();
        for a in &guard {
            for v in a.vars() {
                if c.universal.iter().any(|u| u == v) && !gvars.contains(&vm.var(v)) {
                    gvars.push(vm.var(v));
                }
            }
        }
        let gterms: Vec<Term> = gvars.iter().map(|v| Term::var(v.clone())).collect();
        let aux_m = fresh.aux();
        let mut only_delete = blocked.clone();
        only_delete.push(BodyElem::Naf(Literal::pos(aux_m.clone(), gterms.clone())));
        out.push(Rule::new(dels.clone(), only_delete));
        out.push(aux_rule);
        out.push(Rule::new(
            vec![Literal::pos(aux_m, gterms)],
            guard.iter().map(|a| td(a)).collect(),
        ));
    } else {
        out.push(aux_rule);
    }

    let bound: BTreeSet<&str> = guard.iter().flat_map(|a| a.vars()).collect();
    let mut ins_body = blocked;
    ins_body.extend(guard.iter().map(|a| td(a)));
    for w in &c.existential {
        if !bound.contains(w.as_str()) {
            *dom = true;
            ins_body.push(BodyElem::Pos(Literal::pos(DOM, vec![Term::var(vm.var(w))])));
        }
    }
    let ex: Vec<String> = c.existential.iter().map(|w| vm.var(w)).collect();
    if !ex.is_empty() {
        ins_body.push(BodyElem::Choice(ChoiceGoal {
            keys: keys.clone(),
            chosen: ex,
        }));
    }
    let mut head = dels;
    head.extend(flex_head.iter().map(|a| ann(&a.relation, vm.terms(a), TA)));
    out.push(Rule::new(head, ins_body));
    out
}
