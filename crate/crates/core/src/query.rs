//! First-order evaluation, peer-consistent answers and inclusion rewriting.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lang::ast::{AtomPattern, Formula, Query, Term};
use crate::lang::classify::{classify_dec, DecClass};
use crate::lang::eval::{builtin_holds, resolve, Binding};
use crate::lang::saferange::safe_range_check;
use crate::lang::{Constraint, System};
use crate::oracle::{solutions_direct, OracleOptions, SolutionSet};
use crate::relational::{active_domain, restrict, Atom, Constant, Instance, PeerId, SubschemaRef};

/// A set of answer tuples of fixed arity, in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleSet {
    pub arity: usize,
    pub rows: BTreeSet<Vec<Constant>>,
}

impl TupleSet {
    pub fn new(arity: usize) -> Self {
        TupleSet {
            arity,
            rows: BTreeSet::new(),
        }
    }

    pub fn from_rows<R, C>(arity: usize, rows: impl IntoIterator<Item = R>) -> Self
    where
        R: IntoIterator<Item = C>,
        C: Into<Constant>,
    {
        TupleSet {
            arity,
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(Into::into).collect::<Vec<_>>())
                .inspect(|r| assert_eq!(r.len(), arity, "row arity"))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn intersect(&self, other: &TupleSet) -> TupleSet {
        TupleSet {
            arity: self.arity,
            rows: self.rows.intersection(&other.rows).cloned().collect(),
        }
    }

    /// Rows rendered as `(a,b)`.
    pub fn row_strings(&self) -> Vec<String> {
        self.rows.iter().map(|r| fmt_row(r)).collect()
    }
}

pub(crate) fn fmt_row(r: &[Constant]) -> String {
    let t = Atom::new("", r.iter().cloned());
    t.to_string()
}

impl fmt::Display for TupleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.row_strings().join(", "))
    }
}

impl Serialize for TupleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows.iter().map(|r| r.iter().map(Constant::as_str).collect::<Vec<_>>()))
    }
}

struct Evaluator<'a> {
    inst: &'a Instance,
    domain: &'a [Constant],
}

impl Evaluator<'_> {
    fn atom(&self, a: &AtomPattern, b: &Binding) -> bool {
        let args: Option<Vec<Constant>> = a.terms.iter().map(|t| resolve(t, b).cloned()).collect();
        match args {
            Some(args) => self.inst.contains(&Atom::new(a.relation.clone(), args)),
            None => false,
        }
    }

    fn quantified(&self, vars: &[String], g: &Formula, b: &mut Binding, exists: bool) -> bool {
        let Some((v, rest)) = vars.split_first() else {
            return self.holds(g, b);
        };
        let saved = b.get(v).cloned();
        let mut result = !exists;
        for c in self.domain {
            b.insert(v.clone(), c.clone());
            if self.quantified(rest, g, b, exists) == exists {
                result = exists;
                break;
            }
        }
        match saved {
            Some(c) => b.insert(v.clone(), c),
            None => b.remove(v),
        };
        result
    }

    fn holds(&self, f: &Formula, b: &mut Binding) -> bool {
        match f {
            Formula::Atom(a) => self.atom(a, b),
            Formula::Cmp(c) => builtin_holds(c, b),
            Formula::Not(g) => !self.holds(g, b),
            Formula::And(gs) => gs.iter().all(|g| self.holds(g, b)),
            Formula::Or(gs) => gs.iter().any(|g| self.holds(g, b)),
            Formula::Implies(p, q) => !self.holds(p, b) || self.holds(q, b),
            Formula::Exists(vs, g) => self.quantified(vs, g, b, true),
            Formula::Forall(vs, g) => self.quantified(vs, g, b, false),
        }
    }
}

/// Answers of `q` over `r`; quantifiers range over the active domain of `r`
/// and the constants of `q`.
pub fn eval_fo(q: &Query, r: &Instance) -> Result<TupleSet> {
    if !safe_range_check(q) {
        return Err(Error::NotSafeRange(q.to_string()));
    }
    let domain: Vec<Constant> = active_domain([r], q.formula.constants()).into_iter().collect();
    let body = crate::lang::saferange::closed_body(q);
    let ev = Evaluator { inst: r, domain: &domain };
    let mut out = TupleSet::new(q.head.len());
    let mut b = Binding::new();
    collect(&ev, &q.head, &body, &mut b, &mut out);
    Ok(out)
}

fn collect(ev: &Evaluator<'_>, head: &[String], body: &Formula, b: &mut Binding, out: &mut TupleSet) {
    let depth = b.len();
    if depth == head.len() {
        if ev.holds(body, b) {
            out.rows.insert(head.iter().map(|v| b[v].clone()).collect());
        }
        return;
    }
    let v = &head[depth];
    for c in ev.domain {
        b.insert(v.clone(), c.clone());
        collect(ev, head, body, b, out);
    }
    b.remove(v);
}

/// Replaces each atom over the target of a full inclusion by the disjunction
/// of that atom and the corresponding source atoms.
pub fn rewrite_inclusion(q: &Query, decs: &[Constraint]) -> Result<Query> {
    let mut sources: Vec<(&AtomPattern, &AtomPattern)> = Vec::new();
    for d in decs {
        if classify_dec(d) != DecClass::FullInclusion {
            return Err(Error::NotFullInclusion(d.to_string()));
        }
        let body = d.body_atoms().next().expect("full inclusion has a body atom");
        let head = d.head_atoms().next().expect("full inclusion has a head atom");
        sources.push((head, body));
    }
    fn go(f: &Formula, sources: &[(&AtomPattern, &AtomPattern)]) -> Formula {
        match f {
            Formula::Atom(a) => {
                let mut alts = vec![f.clone()];
                for (head, body) in sources {
                    if head.relation == a.relation {
                        let map: Vec<(&Term, &Term)> = head.terms.iter().zip(&a.terms).collect();
                        let terms = body
                            .terms
                            .iter()
                            .map(|t| {
                                map.iter()
                                    .find(|(h, _)| *h == t)
                                    .map_or_else(|| t.clone(), |(_, x)| (*x).clone())
                            })
                            .collect();
                        alts.push(Formula::Atom(AtomPattern::new(body.relation.clone(), terms)));
                    }
                }
                if alts.len() == 1 {
                    f.clone()
                } else {
                    Formula::Or(alts)
                }
            }
            Formula::Cmp(_) => f.clone(),
            Formula::Not(g) => Formula::Not(Box::new(go(g, sources))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| go(g, sources)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| go(g, sources)).collect()),
            Formula::Implies(p, c) => Formula::Implies(Box::new(go(p, sources)), Box::new(go(c, sources))),
            Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(go(g, sources))),
            Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(go(g, sources))),
        }
    }
    Ok(Query {
        name: q.name.clone(),
        head: q.head.clone(),
        formula: go(&q.formula, &sources),
    })
}

/// How solutions are obtained for answering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Oracle,
    Asp,
    Lav,
    /// The combined program of every peer reachable from the queried one.
    Transitive,
}

/// Peer-consistent answers, or the flag that the peer has no solution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Answers {
    pub answers: TupleSet,
    pub inconsistent: bool,
    pub warnings: Vec<String>,
}

/// Checks that every relation of `q` belongs to `peer`.
pub fn check_local(system: &System, peer: &PeerId, q: &Query) -> Result<()> {
    let own = system.peer(peer)?.relation_names();
    for r in q.formula.relations() {
        if !own.contains(&r) {
            return Err(match system.relation(&r) {
                Some(_) => Error::ForeignRelation {
                    relation: r,
                    peer: peer.to_string(),
                },
                None => Error::UnknownRelation(r),
            });
        }
    }
    Ok(())
}

/// Solutions of `peer` by the given method.
pub fn solutions(system: &System, peer: &PeerId, method: Method, opts: &OracleOptions) -> Result<SolutionSet> {
    use crate::asp::{compile_direct, compile_lav, compile_transitive, unfold_choice};
    use crate::solver::{answer_sets, minimal_models, solutions_from_models};
    let program = match method {
        Method::Oracle => return solutions_direct(system, peer, opts),
        Method::Asp => compile_direct(system, peer)?,
        Method::Lav => compile_lav(system, peer)?,
        Method::Transitive => compile_transitive(system, peer)?,
    };
    let base = system.global_instance();
    let models = minimal_models(answer_sets(&unfold_choice(&program))?, &program, &base)?;
    solutions_from_models(&models, &program, &base)
}

/// Intersection of the answers to `q` over each solution restricted to `peer`.
pub fn answers_over(system: &System, peer: &PeerId, q: &Query, sols: &[Instance]) -> Result<TupleSet> {
    let local = SubschemaRef::new(system.peer(peer)?.relation_names());
    let mut acc: Option<TupleSet> = None;
    for s in sols {
        let a = eval_fo(q, &restrict(s, &local)?)?;
        acc = Some(match acc {
            None => a,
            Some(prev) => prev.intersect(&a),
        });
    }
    Ok(acc.unwrap_or_else(|| TupleSet::new(q.head.len())))
}

/// Answers to `q` true in every solution of `peer`.
pub fn peer_consistent_answers(
    system: &System,
    peer: &PeerId,
    q: &Query,
    method: Method,
    opts: &OracleOptions,
) -> Result<Answers> {
    check_local(system, peer, q)?;
    if !safe_range_check(q) {
        return Err(Error::NotSafeRange(q.to_string()));
    }
    if method == Method::Asp {
        if let Some(a) = cautious_route(system, peer, q)? {
            return Ok(a);
        }
    }
    let sols = solutions(system, peer, method, opts)?;
    Ok(Answers {
        answers: answers_over(system, peer, q, &sols.solutions)?,
        inconsistent: sols.is_empty(),
        warnings: sols.warnings,
    })
}

/// Skeptical answering with an `ans` rule per disjunct, when `q` is
/// positive existential and each disjunct gives a safe rule.
fn cautious_route(system: &System, peer: &PeerId, q: &Query) -> Result<Option<Answers>> {
    use crate::asp::{compile_direct, unfold_choice, BodyElem, Literal, Rule};
    use crate::solver::cautious_over;
    let Some(disjuncts) = dnf(&q.formula, &mut 0) else {
        return Ok(None);
    };
    let mut prog = compile_direct(system, peer)?;
    let preds: BTreeSet<String> = prog.predicates();
    let mut ans = "ans".to_string();
    while preds.contains(&ans) {
        ans.push('_');
    }
    let out_pred = |rel: &str| -> Option<String> {
        prog.outputs
            .values()
            .find(|o| o.relation == rel)
            .map(|o| o.predicate.clone())
    };
    let var = |v: &str| Term::var(format!("V_{v}"));
    let lift = |t: &Term| match t {
        Term::Var(v) => var(v),
        Term::Const(_) => t.clone(),
    };
    let mut rules = Vec::new();
    for d in &disjuncts {
        let mut body = Vec::new();
        for c in d {
            match c {
                Formula::Atom(a) => {
                    let Some(p) = out_pred(&a.relation) else {
                        return Ok(None);
                    };
                    body.push(BodyElem::Pos(Literal::pos(p, a.terms.iter().map(lift).collect())));
                }
                Formula::Cmp(b) => {
                    body.push(BodyElem::Cmp(crate::lang::ast::Builtin::new(b.op, lift(&b.left), lift(&b.right))))
                }
                _ => return Ok(None),
            }
        }
        let head = Literal::pos(ans.clone(), q.head.iter().map(|v| var(v)).collect());
        let rule = Rule::new(vec![head], body);
        if rule.check_safe().is_err() {
            return Ok(None);
        }
        rules.push(rule);
    }
    for r in rules {
        prog.push(r);
    }
    let models = crate::solver::answer_sets(&unfold_choice(&prog))?;
    let models = crate::solver::minimal_models(models, &prog, &system.global_instance())?;
    let c = cautious_over(&models, &ans);
    let answers = TupleSet {
        arity: q.head.len(),
        rows: c.answers.rows,
    };
    Ok(Some(Answers {
        answers,
        inconsistent: c.incoherent,
        warnings: prog.warnings,
    }))
}

/// Disjunctive normal form of a positive existential formula, as lists of
/// atoms and comparisons; bound variables are renamed apart.
fn dnf(f: &Formula, fresh: &mut usize) -> Option<Vec<Vec<Formula>>> {
    match f {
        Formula::Atom(_) | Formula::Cmp(_) => Some(vec![vec![f.clone()]]),
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf(g, fresh)?);
            }
            Some(out)
        }
        Formula::And(gs) => {
            let mut acc = vec![Vec::new()];
            for g in gs {
                let parts = dnf(g, fresh)?;
                let mut next = Vec::new();
                for a in &acc {
                    for p in &parts {
                        let mut c: Vec<Formula> = a.clone();
                        c.extend(p.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            Some(acc)
        }
        Formula::Exists(vs, g) => {
            let mut renamed = (**g).clone();
            for v in vs {
                *fresh += 1;
                renamed = rename(&renamed, v, &format!("{v}_{fresh}"));
            }
            dnf(&renamed, fresh)
        }
        _ => None,
    }
}

fn rename(f: &Formula, from: &str, to: &str) -> Formula {
    let term = |t: &Term| match t {
        Term::Var(v) if v == from => Term::Var(to.to_string()),
        _ => t.clone(),
    };
    match f {
        Formula::Atom(a) => Formula::Atom(AtomPattern::new(a.relation.clone(), a.terms.iter().map(term).collect())),
        Formula::Cmp(b) => Formula::Cmp(crate::lang::ast::Builtin::new(b.op, term(&b.left), term(&b.right))),
        Formula::Not(g) => Formula::Not(Box::new(rename(g, from, to))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename(g, from, to)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename(g, from, to)).collect()),
        Formula::Implies(p, c) => Formula::Implies(Box::new(rename(p, from, to)), Box::new(rename(c, from, to))),
        Formula::Exists(vs, g) | Formula::Forall(vs, g) if vs.iter().any(|v| v == from) => f.clone(),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(rename(g, from, to))),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(rename(g, from, to))),
    }
}
