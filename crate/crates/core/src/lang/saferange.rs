//! Safe-range test via safe-range normal form and range restriction.

use std::collections::BTreeSet;

use super::ast::{CmpOp, Formula, Query, Term};

/// Rewrites `f` so that negation only sits on atoms and existentials,
/// universal quantifiers become `~exists ~`, and implications disappear.
pub fn srnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Cmp(_) => f.clone(),
        Formula::And(fs) => flatten_and(fs.iter().map(srnf).collect()),
        Formula::Or(fs) => flatten_or(fs.iter().map(srnf).collect()),
        Formula::Implies(a, b) => flatten_or(vec![negate(a), srnf(b)]),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(srnf(g))),
        Formula::Forall(vs, g) => Formula::Not(Box::new(Formula::Exists(vs.clone(), Box::new(negate(g))))),
        Formula::Not(g) => negate(g),
    }
}

/// SRNF of `~f`.
fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => Formula::Not(Box::new(f.clone())),
        Formula::Cmp(b) => Formula::Cmp(b.negated()),
        Formula::Not(g) => srnf(g),
        Formula::And(fs) => flatten_or(fs.iter().map(negate).collect()),
        Formula::Or(fs) => flatten_and(fs.iter().map(negate).collect()),
        Formula::Implies(a, b) => flatten_and(vec![srnf(a), negate(b)]),
        Formula::Exists(..) | Formula::Forall(..) => Formula::Not(Box::new(srnf(f))),
    }
}

fn flatten_and(parts: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        Formula::And(out)
    }
}

fn flatten_or(parts: Vec<Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        Formula::Or(out)
    }
}

/// Range-restricted variables of an SRNF formula; `None` marks an unsafe
/// subformula.
pub fn range_restricted(f: &Formula) -> Option<BTreeSet<String>> {
    match f {
        Formula::Atom(a) => Some(a.vars().map(str::to_string).collect()),
        Formula::Cmp(b) => Some(match (&b.op, &b.left, &b.right) {
            (CmpOp::Eq, Term::Var(v), Term::Const(_)) | (CmpOp::Eq, Term::Const(_), Term::Var(v)) => {
                BTreeSet::from([v.clone()])
            }
            _ => BTreeSet::new(),
        }),
        Formula::Not(g) => range_restricted(g).map(|_| BTreeSet::new()),
        Formula::Or(fs) => {
            let mut sets = fs.iter().map(range_restricted);
            let first = sets.next()??;
            sets.try_fold(first, |acc, s| Some(acc.intersection(&s?).cloned().collect()))
        }
        Formula::And(fs) => {
            let mut out = BTreeSet::new();
            for g in fs {
                out.extend(range_restricted(g)?);
            }
            loop {
                let before = out.len();
                for g in fs {
                    if let Formula::Cmp(b) = g {
                        if let (CmpOp::Eq, Term::Var(x), Term::Var(y)) = (&b.op, &b.left, &b.right) {
                            if out.contains(x) || out.contains(y) {
                                out.insert(x.clone());
                                out.insert(y.clone());
                            }
                        }
                    }
                }
                if out.len() == before {
                    break;
                }
            }
            Some(out)
        }
        Formula::Exists(vs, g) => {
            let mut inner = range_restricted(g)?;
            for v in vs {
                if !inner.remove(v) {
                    return None;
                }
            }
            Some(inner)
        }
        Formula::Implies(..) | Formula::Forall(..) => range_restricted(&srnf(f)),
    }
}

/// The query body with its non-answer free variables existentially closed.
pub fn closed_body(q: &Query) -> Formula {
    let extra: Vec<String> = q
        .formula
        .free_vars()
        .into_iter()
        .filter(|v| !q.head.contains(v))
        .collect();
    if extra.is_empty() {
        q.formula.clone()
    } else {
        Formula::Exists(extra, Box::new(q.formula.clone()))
    }
}

/// True iff every answer variable is range-restricted in every disjunct.
pub fn safe_range_check(q: &Query) -> bool {
    let body = closed_body(q);
    let head: BTreeSet<String> = q.head.iter().cloned().collect();
    range_restricted(&srnf(&body)).is_some_and(|rr| rr == head)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_query_unchecked;

    fn safe(text: &str) -> bool {
        safe_range_check(&parse_query_unchecked(text).unwrap())
    }

    #[test]
    fn rewritten_key_query_is_safe() {
        assert!(safe(
            "Q(x,y) := (R1(x,y) & forall z1 ((R3(x,z1) & ~exists z2 R2(x,z2)) -> z1 = y)) | R2(x,y)"
        ));
    }

    #[test]
    fn unsafe_shapes() {
        assert!(!safe("Q(x) := x = x"));
        assert!(!safe("Q(x) := ~R1(x,x)"));
        assert!(!safe("Q(x,y) := R1(x,x) | R2(y,y)"));
        assert!(!safe("Q(x) := R1(x,x) & exists y ~R2(x,y)"));
        assert!(!safe("Q(x,y) := R1(x,x)"));
    }

    #[test]
    fn safe_shapes() {
        assert!(safe("Q(x) := R1(x,y) | R2(x,y)"));
        assert!(safe("Q(x) := R1(x,x) & ~exists y R2(x,y)"));
        assert!(safe("Q(x,y) := R1(x,z) & z = y"));
        assert!(safe("Q(x) := x = 'a'"));
        assert!(safe("Q() := exists x R1(x,x)"));
    }

    #[test]
    fn srnf_removes_universals() {
        let q = parse_query_unchecked("Q(x) := R(x) & forall y (S(x,y) -> T(y))").unwrap();
        let s = srnf(&q.formula).to_string();
        assert!(!s.contains("forall") && !s.contains("->"), "{s}");
    }
}
