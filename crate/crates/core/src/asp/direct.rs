//! Repair programs in the direct and transitive styles.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::program::{BodyElem, ChoiceGoal, Literal, Minimality, OutputMap, Program, Rule};
use crate::error::{Error, Result};
use crate::lang::ast::{AtomPattern, Builtin, CmpOp, Constraint, ConstraintOwner, Term};
use crate::lang::{classify_dec, System};
use crate::relational::{Atom, PeerId};
use crate::trust::neighborhood;

/// Predicate name of a relation: its name with a lowercase first letter.
pub fn predicate_of(relation: &str) -> String {
    let mut c = relation.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn primed(relation: &str) -> String {
    format!("{}p", predicate_of(relation))
}

fn capitalize(v: &str) -> String {
    let mut c = v.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Generic argument variables for persistence-style rules.
pub(crate) fn generic_vars(arity: usize) -> Vec<Term> {
    if arity <= 3 {
        ["X", "Y", "Z"][..arity].iter().map(|v| Term::var(*v)).collect()
    } else {
        (1..=arity).map(|i| Term::var(format!("X{i}"))).collect()
    }
}

/// Program-variable names for a constraint's variables.
pub(crate) struct VarMap(BTreeMap<String, String>);

impl VarMap {
    pub(crate) fn new(c: &Constraint) -> Self {
        let mut map = BTreeMap::new();
        let mut used = BTreeSet::new();
        for v in c.universal.iter().chain(&c.existential) {
            let mut name = capitalize(v);
            let mut n = 1;
            while used.contains(&name) {
                n += 1;
                name = format!("{}_{n}", capitalize(v));
            }
            used.insert(name.clone());
            map.insert(v.clone(), name);
        }
        VarMap(map)
    }

    pub(crate) fn var(&self, v: &str) -> String {
        self.0[v].clone()
    }

    pub(crate) fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => Term::Var(self.var(v)),
            Term::Const(_) => t.clone(),
        }
    }

    pub(crate) fn terms(&self, a: &AtomPattern) -> Vec<Term> {
        a.terms.iter().map(|t| self.term(t)).collect()
    }

    pub(crate) fn builtin(&self, b: &Builtin) -> Builtin {
        Builtin::new(b.op, self.term(&b.left), self.term(&b.right))
    }
}

/// Counters for fresh auxiliary names, shared across one compilation.
#[derive(Default)]
pub(crate) struct Fresh {
    aux: usize,
    ins: usize,
}

impl Fresh {
    pub(crate) fn aux(&mut self) -> String {
        self.aux += 1;
        format!("aux_{}", self.aux)
    }

    fn ins(&mut self) -> String {
        self.ins += 1;
        format!("ins_{}", self.ins)
    }
}

/// One layer of repairs: constraints repaired by changing `target` relations,
/// reading every relation's input contents from `source`.
struct Stage<'a> {
    constraints: Vec<&'a Constraint>,
    source: BTreeMap<String, String>,
    target: BTreeMap<String, String>,
}

#[derive(PartialEq, Eq)]
enum Shape {
    /// No head atoms: a disjunction of deletions, or a denial.
    Denial,
    /// Every head atom is flexible, nothing to delete, no existentials.
    Import,
    General,
}

struct Plan<'a> {
    c: &'a Constraint,
    shape: Shape,
    dels: Vec<&'a AtomPattern>,
    flex_head: Vec<&'a AtomPattern>,
    guard: Vec<&'a AtomPattern>,
}

impl<'a> Stage<'a> {
    fn flexible(&self, rel: &str) -> bool {
        self.target.contains_key(rel)
    }

    fn plan(&self, c: &'a Constraint) -> Plan<'a> {
        let dels: Vec<_> = c.body_atoms().filter(|a| self.flexible(&a.relation)).collect();
        let flex_head: Vec<_> = c.head_atoms().filter(|a| self.flexible(&a.relation)).collect();
        let guard: Vec<_> = c.head_atoms().filter(|a| !self.flexible(&a.relation)).collect();
        let shape = if c.head_atoms().next().is_none() {
            Shape::Denial
        } else if c.existential.is_empty() && dels.is_empty() && guard.is_empty() {
            Shape::Import
        } else {
            Shape::General
        };
        Plan {
            c,
            shape,
            dels,
            flex_head,
            guard,
        }
    }
}

struct Emitter<'p> {
    prog: &'p mut Program,
    fresh: &'p mut Fresh,
    dom: bool,
}

impl Emitter<'_> {
    fn compile_stage(&mut self, st: &Stage<'_>, persist: &BTreeSet<String>, system: &System) {
        let plans: Vec<Plan<'_>> = st.constraints.iter().map(|c| st.plan(c)).collect();
        let deletable: BTreeSet<&str> = plans
            .iter()
            .flat_map(|p| p.dels.iter().map(|a| a.relation.as_str()))
            .collect();
        let insertable: BTreeSet<&str> = plans
            .iter()
            .filter(|p| p.shape != Shape::Denial)
            .flat_map(|p| p.flex_head.iter().map(|a| a.relation.as_str()))
            .collect();
        let star: BTreeSet<&str> = plans
            .iter()
            .flat_map(|p| p.c.body_atoms())
            .map(|a| a.relation.as_str())
            .filter(|r| insertable.contains(r))
            .collect();

        for rel in persist {
            let arity = system.relation(rel).map_or(0, |r| r.arity);
            let args = generic_vars(arity);
            let t = &st.target[rel];
            let mut body = vec![BodyElem::Pos(Literal::pos(st.source[rel].clone(), args.clone()))];
            if deletable.contains(rel.as_str()) {
                body.push(BodyElem::Naf(Literal::neg(t.clone(), args.clone())));
            }
            self.prog.push(Rule::new(vec![Literal::pos(t.clone(), args)], body));
        }
        for rel in &star {
            let arity = system.relation(rel).map_or(0, |r| r.arity);
            let args = generic_vars(arity);
            let s = star_name(&st.target[*rel]);
            for from in [&st.source[*rel], &st.target[*rel]] {
                self.prog.push(Rule::new(
                    vec![Literal::pos(s.clone(), args.clone())],
                    vec![BodyElem::Pos(Literal::pos(from.clone(), args.clone()))],
                ));
            }
        }

        let body_reader = |a: &AtomPattern, vm: &VarMap| -> Literal {
            let pred = if star.contains(a.relation.as_str()) {
                star_name(&st.target[&a.relation])
            } else {
                st.source[&a.relation].clone()
            };
            Literal::pos(pred, vm.terms(a))
        };
        let head_readers = |atoms: &[&AtomPattern], vm: &VarMap| -> Vec<BodyElem> {
            let mut out = Vec::new();
            for a in atoms {
                out.push(BodyElem::Pos(Literal::pos(st.source[&a.relation].clone(), vm.terms(a))));
                if st.flexible(&a.relation) && deletable.contains(a.relation.as_str()) {
                    out.push(BodyElem::Naf(Literal::neg(st.target[&a.relation].clone(), vm.terms(a))));
                }
            }
            out
        };

        for p in &plans {
            let vm = VarMap::new(p.c);
            let mut body: Vec<BodyElem> = p.c.body_atoms().map(|a| BodyElem::Pos(body_reader(a, &vm))).collect();
            body.extend(p.c.body_builtins().map(|b| BodyElem::Cmp(vm.builtin(b))));
            let dels: Vec<Literal> = p
                .dels
                .iter()
                .map(|a| Literal::neg(st.target[&a.relation].clone(), vm.terms(a)))
                .collect();
            match p.shape {
                Shape::Denial => {
                    body.extend(p.c.head_builtins().map(|b| BodyElem::Cmp(vm.builtin(&b.negated()))));
                    self.prog.push(Rule::new(dels, body));
                }
                Shape::Import => {
                    for a in &p.flex_head {
                        let head = Literal::pos(st.target[&a.relation].clone(), vm.terms(a));
                        let mut b = body.clone();
                        if !deletable.contains(a.relation.as_str()) {
                            b.push(BodyElem::Naf(Literal::pos(st.source[&a.relation].clone(), vm.terms(a))));
                        }
                        self.prog.push(Rule::new(vec![head], b));
                    }
                }
                Shape::General => self.general(st, p, &vm, body, dels, &head_readers),
            }
        }
    }

    fn general(
        &mut self,
        st: &Stage<'_>,
        p: &Plan<'_>,
        vm: &VarMap,
        body: Vec<BodyElem>,
        dels: Vec<Literal>,
        head_readers: &dyn Fn(&[&AtomPattern], &VarMap) -> Vec<BodyElem>,
    ) {
        let c = p.c;
        let keys: Vec<String> = c.head_universal_vars().iter().map(|v| vm.var(v)).collect();
        let key_terms: Vec<Term> = keys.iter().map(|k| Term::var(k.clone())).collect();
        let all_head: Vec<&AtomPattern> = c.head_atoms().collect();
        let aux_n = self.fresh.aux();
        let mut blocked = body.clone();
        blocked.push(BodyElem::Naf(Literal::pos(aux_n.clone(), key_terms.clone())));
        if let Some(moot) = self.self_witnesses(p, vm, &body, head_readers) {
            blocked.push(BodyElem::Naf(moot));
        }

        let mut guard_vars: Vec<String> = Vec::new();
        for a in &p.guard {
            for v in a.vars() {
                if c.universal.iter().any(|u| u == v) && !guard_vars.contains(&vm.var(v)) {
                    guard_vars.push(vm.var(v));
                }
            }
        }
        let guard_terms: Vec<Term> = guard_vars.iter().map(|v| Term::var(v.clone())).collect();
        let guard_lits: Vec<BodyElem> = p
            .guard
            .iter()
            .map(|a| BodyElem::Pos(Literal::pos(st.source[&a.relation].clone(), vm.terms(a))))
            .collect();

        let aux_rule = Rule::new(vec![Literal::pos(aux_n, key_terms.clone())], head_readers(&all_head, vm));
        if p.flex_head.is_empty() {
            self.prog.push(Rule::new(dels, blocked));
            self.prog.push(aux_rule);
            return;
        }
        if !p.guard.is_empty() {
            let aux_m = self.fresh.aux();
            let mut only_delete = blocked.clone();
            only_delete.push(BodyElem::Naf(Literal::pos(aux_m.clone(), guard_terms.clone())));
            self.prog.push(Rule::new(dels.clone(), only_delete));
            self.prog.push(aux_rule);
            self.prog.push(Rule::new(vec![Literal::pos(aux_m, guard_terms)], guard_lits.clone()));
        } else {
            self.prog.push(aux_rule);
        }

        let bound_by_guard: BTreeSet<&str> = p.guard.iter().flat_map(|a| a.vars()).collect();
        let mut ins_body = blocked;
        ins_body.extend(guard_lits);
        for w in &c.existential {
            if !bound_by_guard.contains(w.as_str()) {
                self.dom = true;
                ins_body.push(BodyElem::Pos(Literal::pos(DOM, vec![Term::var(vm.var(w))])));
            }
        }
        let ex: Vec<String> = c.existential.iter().map(|w| vm.var(w)).collect();
        if !ex.is_empty() {
            ins_body.push(BodyElem::Choice(ChoiceGoal {
                keys: keys.clone(),
                chosen: ex.clone(),
            }));
        }
        let inserts: Vec<Literal> = p
            .flex_head
            .iter()
            .map(|a| Literal::pos(st.target[&a.relation].clone(), vm.terms(a)))
            .collect();
        let mut head = dels;
        if inserts.len() == 1 {
            head.extend(inserts);
            self.prog.push(Rule::new(head, ins_body));
        } else {
            let ins = self.fresh.ins();
            let ins_args: Vec<Term> = keys.iter().chain(&ex).map(|v| Term::var(v.clone())).collect();
            let ins_lit = Literal::pos(ins, ins_args);
            head.push(ins_lit.clone());
            self.prog.push(Rule::new(head, ins_body));
            for l in inserts {
                self.prog.push(Rule::new(vec![l], vec![BodyElem::Pos(ins_lit.clone())]));
            }
        }
    }
}

impl Emitter<'_> {
    /// Rules for `aux(Ū)` holding when the head is met by atoms of the body
    /// instance itself, with the remaining head atoms read as usual. Deleting
    /// such a body atom falsifies the body, so it must not count as a
    /// violation.
    fn self_witnesses(
        &mut self,
        p: &Plan<'_>,
        vm: &VarMap,
        body: &[BodyElem],
        head_readers: &dyn Fn(&[&AtomPattern], &VarMap) -> Vec<BodyElem>,
    ) -> Option<Literal> {
        let c = p.c;
        let head: Vec<&AtomPattern> = c.head_atoms().collect();
        let options: Vec<Vec<Option<&AtomPattern>>> = head
            .iter()
            .map(|h| {
                let mut o = vec![None];
                if p.flex_head.contains(h) {
                    o.extend(p.dels.iter().filter(|b| b.relation == h.relation).map(|b| Some(*b)));
                }
                o
            })
            .collect();
        if options.iter().all(|o| o.len() == 1) {
            return None;
        }
        let body_vars: BTreeSet<&str> = c.body_atoms().flat_map(|a| a.vars()).collect();
        let args: Vec<Term> = c
            .universal
            .iter()
            .filter(|v| body_vars.contains(v.as_str()))
            .map(|v| Term::var(vm.var(v)))
            .collect();
        let name = self.fresh.aux();
        let mut pick = vec![0; head.len()];
        loop {
            if pick.iter().any(|&i| i > 0) {
                let matched: Vec<(&AtomPattern, &AtomPattern)> = (0..head.len())
                    .filter_map(|k| options[k][pick[k]].map(|b| (head[k], b)))
                    .collect();
                if let Some((sub, eqs)) = unify_all(&matched, &c.existential) {
                    let rest: Vec<AtomPattern> = head
                        .iter()
                        .zip(&pick)
                        .filter(|(_, &i)| i == 0)
                        .map(|(h, _)| AtomPattern::new(h.relation.clone(), h.terms.iter().map(|t| apply(&sub, t)).collect()))
                        .collect();
                    let rest: Vec<&AtomPattern> = rest.iter().collect();
                    let mut b = body.to_vec();
                    b.extend(eqs.into_iter().map(|(l, r)| BodyElem::Cmp(vm.builtin(&Builtin::new(CmpOp::Eq, l, r)))));
                    for e in head_readers(&rest, vm) {
                        if !b.contains(&e) {
                            b.push(e);
                        }
                    }
                    self.prog.push(Rule::new(vec![Literal::pos(name.clone(), args.clone())], b));
                }
            }
            let mut k = 0;
            loop {
                if k == pick.len() {
                    return Some(Literal::pos(name, args));
                }
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
        }
    }
}

fn apply(sub: &BTreeMap<String, Term>, t: &Term) -> Term {
    match t {
        Term::Var(v) => sub.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
    }
}

/// Binds existential variables so that each head atom equals its body
/// atom; the remaining conditions are returned as equalities. None when two
/// distinct constants must agree.
fn unify_all(
    pairs: &[(&AtomPattern, &AtomPattern)],
    existential: &[String],
) -> Option<(BTreeMap<String, Term>, Vec<(Term, Term)>)> {
    let mut sub: BTreeMap<String, Term> = BTreeMap::new();
    for (h, b) in pairs {
        for (ht, bt) in h.terms.iter().zip(&b.terms) {
            if let Term::Var(v) = ht {
                if existential.contains(v) && !sub.contains_key(v) {
                    sub.insert(v.clone(), bt.clone());
                }
            }
        }
    }
    let mut eqs = Vec::new();
    for (h, b) in pairs {
        for (ht, bt) in h.terms.iter().zip(&b.terms) {
            let ht = apply(&sub, ht);
            if &ht == bt {
                continue;
            }
            if matches!((&ht, bt), (Term::Const(_), Term::Const(_))) {
                return None;
            }
            if !eqs.contains(&(ht.clone(), bt.clone())) {
                eqs.push((ht, bt.clone()));
            }
        }
    }
    Some((sub, eqs))
}

pub const DOM: &str = "dom";

fn star_name(target: &str) -> String {
    format!("{target}_star")
}

pub(crate) fn check_supported<'a>(cs: impl IntoIterator<Item = &'a Constraint>) -> Result<()> {
    for c in cs {
        if !classify_dec(c).is_supported() {
            return Err(Error::Unsupported(c.to_string()));
        }
    }
    Ok(())
}

/// Denial constraints for local integrity constraints over the final
/// predicates in `target`.
fn local_denials(ics: &[Constraint], target: &BTreeMap<String, String>, prog: &mut Program) {
    for ic in ics {
        let vm = VarMap::new(ic);
        let mut body: Vec<BodyElem> = ic
            .body_atoms()
            .map(|a| BodyElem::Pos(Literal::pos(target[&a.relation].clone(), vm.terms(a))))
            .collect();
        body.extend(ic.body_builtins().map(|b| BodyElem::Cmp(vm.builtin(b))));
        body.extend(ic.head_builtins().map(|b| BodyElem::Cmp(vm.builtin(&b.negated()))));
        prog.push(Rule::denial(body));
    }
}

/// Adds facts for every base relation the rules read, plus `dom` facts.
fn add_facts(system: &System, prog: &mut Program, dom: bool, base_preds: &BTreeMap<String, String>) {
    let used = prog.predicates();
    let global = system.global_instance();
    for a in global.atoms() {
        let pred = &base_preds[&a.relation];
        if used.contains(pred) {
            prog.facts.insert(Atom::new(pred.clone(), a.args.iter().cloned()));
        }
    }
    if dom {
        let consts = crate::relational::active_domain([&global], system.constraint_constants());
        for c in consts {
            prog.facts.insert(Atom::new(DOM, [c]));
        }
    }
}

struct PeerProgram {
    /// Relations this peer's program changes, with their final predicate.
    finals: BTreeMap<String, String>,
    /// The first stage alone, and whether it reads `dom`.
    stage1: Option<(Program, bool)>,
}

/// Emits the stages of `peer`'s direct program. `naming` gives the final
/// predicate of each relation the peer may change; `sources` gives the
/// predicate to read for every other relation.
fn emit_peer(
    system: &System,
    peer: &PeerId,
    naming: &dyn Fn(&str) -> String,
    sources: &dyn Fn(&str) -> String,
    root: bool,
    em: &mut Emitter<'_>,
) -> Result<PeerProgram> {
    let n = neighborhood(system, peer)?;
    em.prog.warnings.extend(n.warnings.iter().cloned());
    check_supported(n.less_decs.iter().chain(&n.same_decs))?;
    let own = system.peer(peer)?.relation_names();
    let same_rels: BTreeSet<String> = system
        .schema()
        .values()
        .filter(|r| n.same.contains(&r.owner))
        .map(|r| r.name.clone())
        .collect();
    let mentioned = |cs: &[&Constraint]| -> BTreeSet<String> {
        cs.iter()
            .flat_map(|c| c.relations())
            .map(str::to_string)
            .collect()
    };
    let less: Vec<&Constraint> = n.less_decs.iter().collect();
    let both: Vec<&Constraint> = n.less_decs.iter().chain(&n.same_decs).collect();

    let stage1_flex: BTreeSet<String> = own
        .iter()
        .filter(|r| root || mentioned(&less).contains(*r))
        .cloned()
        .collect();
    let mut stage2_flex: BTreeSet<String> = own
        .iter()
        .filter(|r| root || mentioned(&both).contains(*r))
        .cloned()
        .collect();
    stage2_flex.extend(same_rels.intersection(&mentioned(&both)).cloned());

    let two_stage = !n.less_decs.is_empty() && !n.same_decs.is_empty();
    let all_rels: BTreeSet<String> = mentioned(&both).into_iter().chain(own.iter().cloned()).collect();
    let base_source: BTreeMap<String, String> = all_rels.iter().map(|r| (r.clone(), sources(r))).collect();

    let mut finals = BTreeMap::new();
    let mut stage1 = None;
    if two_stage {
        let target1: BTreeMap<String, String> = stage1_flex
            .iter()
            .map(|r| (r.clone(), format!("{}1", naming(r))))
            .collect();
        let st1 = Stage {
            constraints: less.clone(),
            source: base_source.clone(),
            target: target1.clone(),
        };
        em.compile_stage(&st1, &stage1_flex, system);
        let mut first = Program::default();
        let mut first_fresh = Fresh::default();
        let mut first_em = Emitter {
            prog: &mut first,
            fresh: &mut first_fresh,
            dom: false,
        };
        first_em.compile_stage(&st1, &stage1_flex, system);
        let first_dom = first_em.dom;
        set_outputs(&mut first, &target1);
        stage1 = Some((first, first_dom));
        let mut source2 = base_source.clone();
        source2.extend(target1);
        let target2: BTreeMap<String, String> = stage2_flex.iter().map(|r| (r.clone(), naming(r))).collect();
        let st2 = Stage {
            constraints: both,
            source: source2,
            target: target2.clone(),
        };
        em.compile_stage(&st2, &stage2_flex, system);
        finals = target2;
    } else {
        let (cs, flex) = if n.same_decs.is_empty() {
            (less, stage1_flex)
        } else {
            (both, stage2_flex)
        };
        let target: BTreeMap<String, String> = flex.iter().map(|r| (r.clone(), naming(r))).collect();
        let st = Stage {
            constraints: cs,
            source: base_source,
            target: target.clone(),
        };
        em.compile_stage(&st, &flex, system);
        finals.extend(target);
    }
    Ok(PeerProgram { finals, stage1 })
}

fn set_outputs(prog: &mut Program, finals: &BTreeMap<String, String>) {
    for (rel, pred) in finals {
        prog.outputs.insert(
            pred.clone(),
            OutputMap {
                predicate: pred.clone(),
                relation: rel.clone(),
            },
        );
    }
}

/// The direct repair program for `peer`.
pub fn compile_direct(system: &System, peer: &PeerId) -> Result<Program> {
    let p = system.peer(peer)?;
    check_supported(&p.ics)?;
    let mut prog = Program::default();
    let mut fresh = Fresh::default();
    let mut em = Emitter {
        prog: &mut prog,
        fresh: &mut fresh,
        dom: false,
    };
    let pp = emit_peer(system, peer, &|r| primed(r), &|r| predicate_of(r), true, &mut em)?;
    let dom = em.dom;
    local_denials(&p.ics, &pp.finals, &mut prog);
    set_outputs(&mut prog, &pp.finals);
    let base: BTreeMap<String, String> = system.schema().keys().map(|r| (r.clone(), predicate_of(r))).collect();
    add_facts(system, &mut prog, dom, &base);
    prog.minimality = match pp.stage1 {
        Some((mut first, first_dom)) => {
            add_facts(system, &mut first, first_dom, &base);
            Minimality::Staged(Box::new(first))
        }
        None => Minimality::Final,
    };
    Ok(prog)
}

/// Peers reachable from `root` along exchange constraints, in BFS order,
/// and a warning for each dependency cycle found among them.
pub fn reachable_peers(system: &System, root: &PeerId) -> (Vec<PeerId>, Vec<String>) {
    let mut edges: BTreeMap<&PeerId, BTreeSet<&PeerId>> = BTreeMap::new();
    for d in system.decs() {
        if let ConstraintOwner::Dec { from, to } = &d.owner {
            edges.entry(from).or_default().insert(to);
        }
    }
    let mut order = vec![root.clone()];
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(p) = queue.pop_front() {
        for q in edges.get(p).into_iter().flatten() {
            if seen.insert(q) {
                order.push((*q).clone());
                queue.push_back(q);
            }
        }
    }
    let mut warnings = Vec::new();
    // Depth-first search for back edges within the reachable part.
    fn dfs<'a>(
        p: &'a PeerId,
        edges: &BTreeMap<&'a PeerId, BTreeSet<&'a PeerId>>,
        stack: &mut Vec<&'a PeerId>,
        done: &mut BTreeSet<&'a PeerId>,
        warnings: &mut Vec<String>,
    ) {
        stack.push(p);
        for q in edges.get(p).into_iter().flatten() {
            if let Some(i) = stack.iter().position(|s| s == q) {
                let mut cycle: Vec<String> = stack[i..].iter().map(|s| s.to_string()).collect();
                cycle.push(q.to_string());
                warnings.push(format!("implicit cyclic dependency: {}", cycle.join(" -> ")));
            } else if !done.contains(q) {
                dfs(q, edges, stack, done, warnings);
            }
        }
        stack.pop();
        done.insert(p);
    }
    dfs(root, &edges, &mut Vec::new(), &mut BTreeSet::new(), &mut warnings);
    (order, warnings)
}

/// The combined program of every peer reachable from `peer`.
pub fn compile_transitive(system: &System, peer: &PeerId) -> Result<Program> {
    let p = system.peer(peer)?;
    check_supported(&p.ics)?;
    let (peers, cycle_warnings) = reachable_peers(system, peer);
    // Which relations each owner primes in its own program.
    let mut primes: BTreeSet<String> = BTreeSet::new();
    for q in &peers {
        let n = neighborhood(system, q)?;
        let own = system.peer(q)?.relation_names();
        for d in n.less_decs.iter().chain(&n.same_decs) {
            primes.extend(d.relations().into_iter().map(str::to_string).filter(|r| own.contains(r)));
        }
        if q == peer {
            primes.extend(own);
        }
    }
    let source = |r: &str| -> String {
        if primes.contains(r) {
            primed(r)
        } else {
            predicate_of(r)
        }
    };
    let mut prog = Program::default();
    prog.warnings.extend(cycle_warnings);
    let mut fresh = Fresh::default();
    let mut finals_root = BTreeMap::new();
    let mut dom = false;
    for q in &peers {
        let own = system.peer(q)?.relation_names();
        let naming = |r: &str| -> String {
            if own.contains(r) {
                primed(r)
            } else {
                format!("{}_{}", primed(r), predicate_of(q.as_str()))
            }
        };
        let reads = |r: &str| -> String {
            if own.contains(r) {
                predicate_of(r)
            } else {
                source(r)
            }
        };
        let mut em = Emitter {
            prog: &mut prog,
            fresh: &mut fresh,
            dom: false,
        };
        let pp = emit_peer(system, q, &naming, &reads, q == peer, &mut em)?;
        dom |= em.dom;
        if q == peer {
            finals_root = pp.finals;
        }
    }
    local_denials(&p.ics, &finals_root, &mut prog);
    for r in &primes {
        let pred = primed(r);
        prog.outputs.insert(
            pred.clone(),
            OutputMap {
                predicate: pred,
                relation: r.clone(),
            },
        );
    }
    prog.warnings.dedup();
    let base: BTreeMap<String, String> = system.schema().keys().map(|r| (r.clone(), predicate_of(r))).collect();
    add_facts(system, &mut prog, dom, &base);
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::unfold_choice;
    use crate::lang::parse_system;
    use crate::oracle::{solutions_direct, OracleOptions};
    use crate::solver::{answer_sets, solutions_from_models};

    fn fixture(name: &str) -> System {
        let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        parse_system(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn rules(p: &Program) -> Vec<String> {
        p.rules.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn mixed_referential_rules() {
        let s = fixture("fix_b.p2p");
        let p = compile_direct(&s, &PeerId::new("P")).unwrap();
        assert_eq!(
            rules(&p),
            [
                "r1p(X,Y) :- r1(X,Y), not -r1p(X,Y).",
                "r2p(X,Y) :- r2(X,Y).",
                "-r1p(X,Y) :- r1(X,Y), s1(Z,Y), not aux_1(X,Z), not aux_2(Z).",
                "aux_1(X,Z) :- r2(X,W), s2(Z,W).",
                "aux_2(Z) :- s2(Z,W).",
                "-r1p(X,Y) v r2p(X,W) :- r1(X,Y), s1(Z,Y), not aux_1(X,Z), s2(Z,W), choice((X,Z),W).",
            ]
        );
    }

    #[test]
    fn transitive_rules() {
        let s = fixture("fix_c.p2p");
        let p = compile_transitive(&s, &PeerId::new("P")).unwrap();
        let r = rules(&p);
        assert!(r.contains(&"s1p(X,Y) :- u(X,Y), not s1(X,Y).".to_string()), "{r:?}");
        assert!(r.contains(&"-r1p(X,Y) :- r1(X,Y), s1p(Z,Y), not aux_1(X,Z), not aux_2(Z).".to_string()));
    }

    fn asp_solutions(s: &System, p: &Program) -> Vec<String> {
        let models = answer_sets(&unfold_choice(p)).unwrap();
        let sol = solutions_from_models(&models, p, &s.global_instance()).unwrap();
        sol.solutions.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn agrees_with_oracle() {
        for f in ["fix_a.p2p", "fix_b.p2p", "fix_b_fd.p2p"] {
            let s = fixture(f);
            for peer in s.peers().keys() {
                let p = compile_direct(&s, peer).unwrap();
                let oracle = solutions_direct(&s, peer, &OracleOptions::default()).unwrap();
                let expected: Vec<String> = oracle.solutions.iter().map(ToString::to_string).collect();
                assert_eq!(asp_solutions(&s, &p), expected, "{f} {peer}\n{p}");
            }
        }
    }

    #[test]
    fn head_met_by_body_is_not_a_violation() {
        let s = parse_system(
            "peer P1 { schema A1/2; instance A1(d,b), A1(c,a), A1(b,b), A1(a,d); }
             peer P2 { schema A2/1, B2/2; instance A2(c), B2(a,b), B2(d,c); }
             trust P2 same P1;
             dec P1 -> P2 : forall x,y,z exists w (A1(x,y) & B2(z,y) -> A1(x,w) & B2(z,w));",
        )
        .unwrap();
        let peer = PeerId::new("P1");
        let p = compile_direct(&s, &peer).unwrap();
        assert!(p.to_string().contains("aux_2(X,Y,Z) :- a1p_star(X,Y), b2p_star(Z,Y)."), "{p}");
        let oracle = solutions_direct(&s, &peer, &OracleOptions::default()).unwrap();
        let expected: Vec<String> = oracle.solutions.iter().map(ToString::to_string).collect();
        assert_eq!(expected.len(), 1);
        assert_eq!(asp_solutions(&s, &p), expected);
    }

    #[test]
    fn transitive_solutions() {
        let s = fixture("fix_c.p2p");
        let p = compile_transitive(&s, &PeerId::new("P")).unwrap();
        assert_eq!(
            asp_solutions(&s, &p),
            [
                "{R1(a,b), R2(a,e), S1(c,b), S2(c,e), S2(c,f), U(c,b)}",
                "{R1(a,b), R2(a,f), S1(c,b), S2(c,e), S2(c,f), U(c,b)}",
                "{S1(c,b), S2(c,e), S2(c,f), U(c,b)}",
            ]
        );
    }
}
