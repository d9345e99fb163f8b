use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::asp::{BodyElem, Literal, Program, Rule};
use crate::error::{Error, Result};
use crate::lang::ast::Term;
use crate::lang::eval::{resolve, Binding};
use crate::relational::Constant;

/// A ground classical literal: `p(c̄)` or `-p(c̄)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundLiteral {
    pub predicate: String,
    pub args: Vec<Constant>,
    pub negated: bool,
}

impl GroundLiteral {
    pub fn new(predicate: impl Into<String>, args: impl IntoIterator<Item = impl Into<Constant>>) -> Self {
        GroundLiteral {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
            negated: false,
        }
    }

    pub fn complement(&self) -> GroundLiteral {
        GroundLiteral {
            negated: !self.negated,
            ..self.clone()
        }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = Literal {
            predicate: self.predicate.clone(),
            args: self.args.iter().cloned().map(Term::Const).collect(),
            negated: self.negated,
        };
        write!(f, "{lit}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: Vec<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    pub atoms: Vec<GroundLiteral>,
    pub index: HashMap<GroundLiteral, usize>,
    pub rules: Vec<GroundRule>,
}

impl GroundProgram {
    fn intern(&mut self, l: GroundLiteral) -> usize {
        if let Some(&i) = self.index.get(&l) {
            return i;
        }
        let i = self.atoms.len();
        self.atoms.push(l.clone());
        self.index.insert(l, i);
        i
    }

    pub fn id(&self, l: &GroundLiteral) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn render_rule(&self, r: &GroundRule) -> String {
        let name = |i: &usize| self.atoms[*i].to_string();
        let head: Vec<String> = r.head.iter().map(name).collect();
        let mut body: Vec<String> = r.pos.iter().map(name).collect();
        body.extend(r.neg.iter().map(|i| format!("not {}", self.atoms[*i])));
        match (head.is_empty(), body.is_empty()) {
            (_, true) => format!("{}.", head.join(" v ")),
            (true, false) => format!(":- {}.", body.join(", ")),
            (false, false) => format!("{} :- {}.", head.join(" v "), body.join(", ")),
        }
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", self.render_rule(r))?;
        }
        Ok(())
    }
}

fn ground_lit(l: &Literal, b: &Binding) -> GroundLiteral {
    GroundLiteral {
        predicate: l.predicate.clone(),
        args: l
            .args
            .iter()
            .map(|t| resolve(t, b).expect("safe rule binds every variable").clone())
            .collect(),
        negated: l.negated,
    }
}

fn unify(l: &Literal, g: &GroundLiteral, b: &Binding) -> Option<Binding> {
    if l.args.len() != g.args.len() {
        return None;
    }
    let mut out = b.clone();
    for (t, c) in l.args.iter().zip(&g.args) {
        match t {
            Term::Const(k) if k != c => return None,
            Term::Const(_) => {}
            Term::Var(v) => match out.get(v) {
                Some(x) if x != c => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), c.clone());
                }
            },
        }
    }
    Some(out)
}

type Possible = BTreeMap<(String, bool), BTreeSet<Vec<Constant>>>;

fn instances(rule: &Rule, possible: &Possible) -> Vec<Binding> {
    let mut pos: Vec<&Literal> = rule.positive().collect();
    // Join the most constrained literals first.
    pos.sort_by_key(|l| {
        possible
            .get(&(l.predicate.clone(), l.negated))
            .map_or(0, BTreeSet::len)
    });
    let mut frontier = vec![Binding::new()];
    for l in pos {
        let Some(rows) = possible.get(&(l.predicate.clone(), l.negated)) else {
            return Vec::new();
        };
        let mut next = Vec::new();
        for b in &frontier {
            for args in rows {
                let g = GroundLiteral {
                    predicate: l.predicate.clone(),
                    args: args.clone(),
                    negated: l.negated,
                };
                if let Some(nb) = unify(l, &g, b) {
                    next.push(nb);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    frontier.retain(|b| {
        rule.body.iter().all(|e| match e {
            BodyElem::Cmp(c) => crate::lang::eval::builtin_holds(c, b),
            _ => true,
        })
    });
    frontier
}

/// Instantiates `p` over the atoms its rules can derive, then simplifies:
/// builtins are evaluated, `not a` with `a` underivable is dropped, rules
/// blocked by a fact are removed, and coherence denials are added.
pub fn ground(p: &Program) -> Result<GroundProgram> {
    if p.has_choice() {
        return Err(Error::Unsupported("choice goals must be unfolded before grounding".into()));
    }
    p.check_safe()?;
    let mut possible: Possible = BTreeMap::new();
    for a in &p.facts {
        possible
            .entry((a.relation.clone(), false))
            .or_default()
            .insert(a.args.clone());
    }
    loop {
        let mut changed = false;
        for r in &p.rules {
            for b in instances(r, &possible) {
                for h in &r.head {
                    let g = ground_lit(h, &b);
                    changed |= possible
                        .entry((g.predicate, g.negated))
                        .or_default()
                        .insert(g.args);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let is_possible = |g: &GroundLiteral| {
        possible
            .get(&(g.predicate.clone(), g.negated))
            .is_some_and(|s| s.contains(&g.args))
    };
    let facts: BTreeSet<GroundLiteral> = p
        .facts
        .iter()
        .map(|a| GroundLiteral {
            predicate: a.relation.clone(),
            args: a.args.clone(),
            negated: false,
        })
        .collect();
    let mut g = GroundProgram::default();
    for f in &facts {
        let id = g.intern(f.clone());
        g.rules.push(GroundRule {
            head: vec![id],
            pos: Vec::new(),
            neg: Vec::new(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for r in &p.rules {
        'inst: for b in instances(r, &possible) {
            let mut neg = Vec::new();
            for l in r.negative() {
                let gl = ground_lit(l, &b);
                if facts.contains(&gl) {
                    continue 'inst;
                }
                if is_possible(&gl) {
                    neg.push(gl);
                }
            }
            let head: Vec<GroundLiteral> = r.head.iter().map(|h| ground_lit(h, &b)).collect();
            let pos: Vec<GroundLiteral> = r.positive().map(|l| ground_lit(l, &b)).collect();
            if head.iter().any(|h| facts.contains(h)) {
                continue;
            }
            let mut gr = GroundRule {
                head: head.into_iter().map(|h| g.intern(h)).collect(),
                pos: pos.into_iter().map(|l| g.intern(l)).collect(),
                neg: neg.into_iter().map(|l| g.intern(l)).collect(),
            };
            gr.head.sort_unstable();
            gr.head.dedup();
            gr.pos.sort_unstable();
            gr.pos.dedup();
            gr.neg.sort_unstable();
            gr.neg.dedup();
            if seen.insert(gr.clone()) {
                g.rules.push(gr);
            }
        }
    }
    let negs: Vec<(usize, usize)> = g
        .atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.negated)
        .filter_map(|(i, a)| g.id(&a.complement()).map(|j| (j, i)))
        .collect();
    for (p_id, n_id) in negs {
        g.rules.push(GroundRule {
            head: Vec::new(),
            pos: vec![p_id, n_id],
            neg: Vec::new(),
        });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::parse_program;

    #[test]
    fn simple_grounding() {
        let g = ground(&parse_program("q(a). p(X) :- q(X).").unwrap()).unwrap();
        assert_eq!(g.to_string(), "q(a).\np(a) :- q(a).\n");
    }

    #[test]
    fn false_builtin_drops_rule() {
        let g = ground(&parse_program("q(a). p(X) :- q(X), X != a.").unwrap()).unwrap();
        assert_eq!(g.to_string(), "q(a).\n");
    }

    #[test]
    fn coherence_denial() {
        let g = ground(&parse_program("q(a). p(X) :- q(X), not r. -p(X) :- q(X), not s.").unwrap()).unwrap();
        assert!(g.to_string().contains(":- p(a), -p(a)."), "{g}");
    }

    #[test]
    fn choice_must_be_unfolded() {
        let p = parse_program("q(a,b). p(X,Y) :- q(X,Y), choice((X),Y).").unwrap();
        assert!(matches!(ground(&p), Err(Error::Unsupported(_))));
    }
}
