//! Constraint satisfaction over ground instances.

use std::collections::BTreeMap;

use super::ast::{AtomPattern, Builtin, Constraint, Term};
use crate::relational::{Atom, Constant, Instance};

pub type Binding = BTreeMap<String, Constant>;

pub fn resolve<'a>(t: &'a Term, b: &'a Binding) -> Option<&'a Constant> {
    match t {
        Term::Const(c) => Some(c),
        Term::Var(v) => b.get(v),
    }
}

/// Ground `p` under `b`; every variable must be bound.
pub fn instantiate(p: &AtomPattern, b: &Binding) -> Atom {
    Atom::new(
        p.relation.clone(),
        p.terms
            .iter()
            .map(|t| resolve(t, b).expect("pattern variable is bound").clone()),
    )
}

pub fn builtin_holds(bi: &Builtin, b: &Binding) -> bool {
    match (resolve(&bi.left, b), resolve(&bi.right, b)) {
        (Some(l), Some(r)) => bi.op.holds(l, r),
        _ => false,
    }
}

/// Extend `b` so that `p` matches `atom`.
pub fn unify(p: &AtomPattern, atom: &Atom, b: &Binding) -> Option<Binding> {
    if p.relation != atom.relation || p.terms.len() != atom.args.len() {
        return None;
    }
    let mut out = b.clone();
    for (t, c) in p.terms.iter().zip(&atom.args) {
        match t {
            Term::Const(k) if k != c => return None,
            Term::Const(_) => {}
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != c => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), c.clone());
                }
            },
        }
    }
    Some(out)
}

/// All extensions of `start` that make every pattern true in `inst`.
pub fn join<'a>(
    patterns: impl IntoIterator<Item = &'a AtomPattern>,
    inst: &Instance,
    start: Binding,
) -> Vec<Binding> {
    let mut frontier = vec![start];
    for p in patterns {
        let mut next = Vec::new();
        for b in &frontier {
            for a in inst.tuples(&p.relation) {
                if let Some(nb) = unify(p, a, b) {
                    next.push(nb);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    frontier
}

/// Body matches of `c` in `inst`, restricted to the universal variables.
pub fn body_matches(c: &Constraint, inst: &Instance) -> Vec<Binding> {
    let mut out: Vec<Binding> = join(c.body_atoms(), inst, Binding::new())
        .into_iter()
        .filter(|b| c.body_builtins().all(|bi| builtin_holds(bi, b)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Whether the head of `c` holds under the universal binding `b`.
pub fn head_holds(c: &Constraint, inst: &Instance, b: &Binding) -> bool {
    if c.is_denial() {
        return false;
    }
    join(c.head_atoms(), inst, b.clone())
        .iter()
        .any(|e| c.head_builtins().all(|bi| builtin_holds(bi, e)))
}

/// Universal bindings whose body holds and whose head fails.
pub fn violations(c: &Constraint, inst: &Instance) -> Vec<Binding> {
    body_matches(c, inst)
        .into_iter()
        .filter(|b| !head_holds(c, inst, b))
        .collect()
}

pub fn satisfies(c: &Constraint, inst: &Instance) -> bool {
    body_matches(c, inst)
        .iter()
        .all(|b| head_holds(c, inst, b))
}

pub fn satisfies_all<'a>(cs: impl IntoIterator<Item = &'a Constraint>, inst: &Instance) -> bool {
    cs.into_iter().all(|c| satisfies(c, inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_constraint;
    use crate::relational::{RelationSymbol, Schema};

    fn inst(atoms: &[(&str, &[&str])]) -> Instance {
        let mut schema = Schema::new();
        for (r, args) in atoms {
            schema.insert(r.to_string(), RelationSymbol::new(*r, args.len(), "P"));
        }
        for r in ["R", "S"] {
            schema.entry(r.into()).or_insert_with(|| RelationSymbol::new(r, 2, "P"));
        }
        Instance::from_atoms(schema, atoms.iter().map(|(r, a)| Atom::new(*r, a.iter().copied()))).unwrap()
    }

    #[test]
    fn fd_violations() {
        let c = parse_constraint("forall x,y,z (R(x,y) & R(x,z) -> y = z)").unwrap();
        let i = inst(&[("R", &["a", "b"]), ("R", &["a", "c"])]);
        assert_eq!(violations(&c, &i).len(), 2);
        let j = inst(&[("R", &["a", "b"])]);
        assert!(satisfies(&c, &j));
    }

    #[test]
    fn existential_head() {
        let c = parse_constraint("forall x,y exists w (R(x,y) -> S(y,w))").unwrap();
        let i = inst(&[("R", &["a", "b"]), ("S", &["b", "z"])]);
        assert!(satisfies(&c, &i));
        let j = inst(&[("R", &["a", "b"]), ("S", &["c", "z"])]);
        assert_eq!(violations(&c, &j).len(), 1);
    }

    #[test]
    fn denial() {
        let c = parse_constraint("forall x,y (R(x,y) & S(y,x))").unwrap();
        let i = inst(&[("R", &["a", "b"]), ("S", &["b", "a"])]);
        assert!(!satisfies(&c, &i));
    }
}
